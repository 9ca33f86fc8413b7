//! Conclusive-exclusion toolkit for PBR-style qubit families.
//!
//! The crate builds the `2^n` product states `⊗ᵢ (cos(θ/2)|0⟩ ± sin(θ/2)|1⟩)`,
//! passes them through Pauli noise channels, and minimizes
//! `σ = Σₓ Tr(Eₓ ρₓ)` over POVMs with a dedicated ADMM solver. A vanishing
//! minimum means the family is antidistinguishable: some measurement always
//! names a state that was not prepared.
//!
//! Modules, bottom-up:
//!
//! - [`linalg`]: dense complex matrices, Jacobi eigensolver, PSD projection.
//! - [`states`]: single-qubit states, product families, trace distance.
//! - [`channels`]: collective and independent Pauli noise in Kraus form.
//! - [`sdp`]: the exclusion SDP, its dual certificate and optimality test.
//! - [`bounds`]: closed-form onsets and measurement lifting.
//! - [`qom`]: finite ontological-model checks of the overlap identities.
//! - [`sweep`]: grid sweeps, onset bisection, CSV/gnuplot output, presets.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channels;
pub mod error;
pub mod linalg;
pub mod qom;
pub mod sdp;
pub mod states;
pub mod sweep;

pub use error::{Error, Result};
