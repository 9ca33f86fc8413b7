//! The two-state qubit pair `cos(θ/2)|0⟩ ± sin(θ/2)|1⟩` and its `n`-fold
//! product family.
//!
//! Family members are indexed by the bitstring `x = (x₁, …, x_n)` read as a
//! big-endian counter: `x₁` is the most significant bit and the leftmost
//! tensor factor.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, kron_all, ComplexMatrix, C64};

/// Default cap on qubit count (dimension `2^6 = 64`).
pub const DEFAULT_MAX_QUBITS: usize = 6;

/// Tolerance used when validating density matrices.
pub const STATE_TOL: f64 = 1e-9;

/// A density matrix on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    n_qubits: usize,
}

impl DensityMatrix {
    /// Wraps `mat` after checking Hermiticity, positivity and unit trace.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let dim = mat.dim();
        if !dim.is_power_of_two() {
            return Err(Error::InvalidN(dim));
        }
        let eig = eig_hermitian(&mat)?;
        let tr = mat.trace();
        if eig.min_value() < -STATE_TOL || (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::NotDensityMatrix(format!(
                "min eigenvalue {:.3e}, trace {:.12}",
                eig.min_value(),
                tr.re
            )));
        }
        Ok(Self {
            mat,
            n_qubits: dim.trailing_zeros() as usize,
        })
    }

    /// Wraps a matrix that is a density matrix by construction.
    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        let n_qubits = mat.dim().trailing_zeros() as usize;
        debug_assert!(mat.dim().is_power_of_two());
        Self { mat, n_qubits }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_trusted(crate::linalg::kron(&self.mat, &other.mat))
    }
}

/// The labelled states of an exclusion problem together with their prior.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFamily {
    theta: f64,
    n_qubits: usize,
    states: Vec<DensityMatrix>,
    weights: Vec<f64>,
}

impl StateFamily {
    /// Family with uniform weights. `theta` is kept as metadata only.
    pub fn from_states(theta: f64, states: Vec<DensityMatrix>) -> Result<Self> {
        let k = states.len();
        let weights = vec![1.0 / k as f64; k];
        Self::with_weights(theta, states, weights)
    }

    pub fn with_weights(theta: f64, states: Vec<DensityMatrix>, weights: Vec<f64>) -> Result<Self> {
        let first = states.first().ok_or(Error::LengthMismatch(0, weights.len()))?;
        let dim = first.dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch(dim, bad.dim()));
        }
        if weights.len() != states.len() {
            return Err(Error::LengthMismatch(states.len(), weights.len()));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "weights must be nonnegative and sum to 1 (sum {total})"
            )));
        }
        Ok(Self {
            theta,
            n_qubits: first.n_qubits(),
            states,
            weights,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn state(&self, index: usize) -> &DensityMatrix {
        &self.states[index]
    }

    /// Same labels and weights, each state replaced through `f`.
    pub fn map_states(&self, mut f: impl FnMut(usize, &DensityMatrix) -> DensityMatrix) -> StateFamily {
        StateFamily {
            theta: self.theta,
            n_qubits: self.n_qubits,
            states: self.states.iter().enumerate().map(|(i, s)| f(i, s)).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Bits of `index` as an `n`-bit big-endian string (`bits[0]` is the most significant).
pub fn index_bits(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((index >> (n - 1 - i)) & 1) as u8).collect()
}

pub fn check_theta(theta: f64) -> Result<()> {
    if (0.0..FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(Error::ThetaOutOfRange(theta))
    }
}

/// `cos(θ/2)|0⟩ + (−1)^x sin(θ/2)|1⟩`
pub fn qubit_ket(theta: f64, x: u8) -> [C64; 2] {
    let sign = if x & 1 == 0 { 1.0 } else { -1.0 };
    let half = theta / 2.0;
    [C64::new(half.cos(), 0.0), C64::new(sign * half.sin(), 0.0)]
}

/// Projector onto [`qubit_ket`].
pub fn pure_qubit(theta: f64, x: u8) -> Result<DensityMatrix> {
    check_theta(theta)?;
    Ok(DensityMatrix::from_trusted(ComplexMatrix::outer(&qubit_ket(theta, x))))
}

/// The `2^n` product states with uniform weights and the default qubit cap.
pub fn build_family(theta: f64, n: usize) -> Result<StateFamily> {
    build_family_capped(theta, n, DEFAULT_MAX_QUBITS)
}

pub fn build_family_capped(theta: f64, n: usize, max_qubits: usize) -> Result<StateFamily> {
    check_theta(theta)?;
    if n == 0 {
        return Err(Error::InvalidN(n));
    }
    if n > max_qubits {
        return Err(Error::NTooLarge { n, cap: max_qubits });
    }
    let singles = [pure_qubit(theta, 0)?, pure_qubit(theta, 1)?];
    let count = 1usize << n;
    let states = (0..count)
        .map(|idx| {
            let bits = index_bits(idx, n);
            DensityMatrix::from_trusted(kron_all(bits.iter().map(|&b| singles[b as usize].matrix())))
        })
        .collect();
    StateFamily::from_states(theta, states)
}

/// `½ Σ |λᵢ(a − b)|`
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let diff = a.matrix() - b.matrix();
    let eig = eig_hermitian(&diff)?;
    Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// `θ = asin(s)` for a point on the trace-distance axis.
pub fn theta_from_sin(sin_theta: f64) -> f64 {
    sin_theta.clamp(0.0, 1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, trace_product};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const NEAR_HALF_PI: f64 = FRAC_PI_2 - 1e-9;

    #[test]
    fn states_coincide_at_zero() {
        let a = pure_qubit(0.0, 0).unwrap();
        let b = pure_qubit(0.0, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matrix(), &ComplexMatrix::from_real_diagonal(&[1.0, 0.0]));
    }

    #[test]
    fn near_half_pi_states_are_plus_minus() {
        let a = pure_qubit(NEAR_HALF_PI, 0).unwrap();
        let b = pure_qubit(NEAR_HALF_PI, 1).unwrap();
        let overlap = trace_product(a.matrix(), b.matrix()).unwrap().re;
        assert!(overlap.abs() < 1e-12);
        assert!((a.matrix()[(0, 1)].re - 0.5).abs() < 1e-9);
        assert!((b.matrix()[(0, 1)].re + 0.5).abs() < 1e-9);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn overlap_is_cos_squared() {
        // |⟨ψ0|ψ1⟩|² = (cos²(θ/2) − sin²(θ/2))² = cos²θ; θ = π/3 gives 1/4
        let a = pure_qubit(PI / 3.0, 0).unwrap();
        let b = pure_qubit(PI / 3.0, 1).unwrap();
        let ov = trace_product(a.matrix(), b.matrix()).unwrap();
        assert!((ov.re - 0.25).abs() < 1e-14 && ov.im.abs() < 1e-15);
    }

    #[test]
    fn theta_domain_is_enforced() {
        assert!(matches!(pure_qubit(FRAC_PI_2, 0), Err(Error::ThetaOutOfRange(_))));
        assert!(matches!(pure_qubit(-0.1, 0), Err(Error::ThetaOutOfRange(_))));
        assert!(matches!(build_family(2.0, 2), Err(Error::ThetaOutOfRange(_))));
        assert!(matches!(build_family(0.5, 7), Err(Error::NTooLarge { n: 7, cap: 6 })));
        assert!(matches!(build_family(0.5, 0), Err(Error::InvalidN(0))));
    }

    #[test]
    fn family_ordering_is_big_endian() {
        let theta = 0.7;
        let fam = build_family(theta, 2).unwrap();
        assert_eq!(fam.len(), 4);
        let r0 = pure_qubit(theta, 0).unwrap();
        let r1 = pure_qubit(theta, 1).unwrap();
        assert_eq!(fam.state(1).matrix(), &kron(r0.matrix(), r1.matrix()));
        assert_eq!(fam.state(2).matrix(), &kron(r1.matrix(), r0.matrix()));
        assert!(fam.weights().iter().all(|&w| w == 0.25));
        assert_eq!(index_bits(6, 3), vec![1, 1, 0]);
    }

    #[test]
    fn zero_theta_family_is_constant() {
        let fam = build_family(0.0, 3).unwrap();
        assert!(fam.states().iter().all(|s| s == fam.state(0)));
    }

    #[test]
    fn trace_distance_examples() {
        let a = pure_qubit(0.4, 0).unwrap();
        assert!(trace_distance(&a, &a).unwrap().abs() < 1e-15);
        let b = pure_qubit(PI / 4.0, 0).unwrap();
        let c = pure_qubit(PI / 4.0, 1).unwrap();
        // difference matrix has eigenvalues ±sin(π/4)
        assert!((trace_distance(&b, &c).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        let fam = build_family(0.3, 2).unwrap();
        assert!(matches!(
            trace_distance(&a, fam.state(0)),
            Err(Error::DimensionMismatch(2, 4))
        ));
    }

    #[test]
    fn trace_distance_is_sin_theta_on_grid() {
        for k in 0..100 {
            let theta = k as f64 / 100.0 * FRAC_PI_2;
            let a = pure_qubit(theta, 0).unwrap();
            let b = pure_qubit(theta, 1).unwrap();
            assert!((trace_distance(&a, &b).unwrap() - theta.sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.5, 0.5])).is_ok());
        assert!(DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(3).scale(1.0 / 3.0)).is_err());
    }

    proptest! {
        #[test]
        fn members_are_rank_one(theta in 0.0..FRAC_PI_2, n in 1usize..=4) {
            let fam = build_family(theta, n).unwrap();
            for s in fam.states() {
                let eig = eig_hermitian(s.matrix()).unwrap();
                prop_assert!((eig.values[0] - 1.0).abs() <= 1e-9);
                prop_assert!(eig.values[1] <= 1e-9);
            }
        }

        #[test]
        fn born_rule_factorizes_over_product_effects(
            theta in 0.0..FRAC_PI_2,
            n in 1usize..=3,
            index in 0usize..8,
            angles in proptest::collection::vec((0.0..PI, 0.0..2.0 * PI), 3),
        ) {
            let fam = build_family(theta, n).unwrap();
            let index = index % fam.len();
            let bits = index_bits(index, n);
            // local rank-1 effects |φ⟩⟨φ| on the Bloch sphere
            let effects: Vec<ComplexMatrix> = angles[..n]
                .iter()
                .map(|&(pol, az)| {
                    let v = [C64::new((pol / 2.0).cos(), 0.0), C64::from_polar((pol / 2.0).sin(), az)];
                    ComplexMatrix::outer(&v)
                })
                .collect();
            let joint = kron_all(effects.iter());
            let lhs = trace_product(&joint, fam.state(index).matrix()).unwrap().re;
            let rhs: f64 = effects
                .iter()
                .zip(&bits)
                .map(|(e, &b)| trace_product(e, pure_qubit(theta, b).unwrap().matrix()).unwrap().re)
                .product();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-300) + 1e-15);
        }
    }
}
