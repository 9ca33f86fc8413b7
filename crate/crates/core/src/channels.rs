//! Pauli noise in Kraus form.
//!
//! Two interaction patterns are supported:
//!
//! - **collective**: `ρ ↦ p·ρ + (1−p)·W ρ W†` with the single Pauli word
//!   `W = σ^{⊗j} ⊗ 𝟙^{⊗(n−j)}` acting on the first `j` qubits;
//! - **independent**: every qubit goes through its own
//!   `ρ ↦ p·ρ + (1−p)·σ ρ σ` with the same Pauli and the same `p`.
//!
//! `p` is the probability that the noise does *not* act.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{kron, kron_all, ComplexMatrix, Pauli};
use crate::states::{DensityMatrix, StateFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseMode {
    Collective,
    Independent,
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseMode::Collective => "collective",
            NoiseMode::Independent => "independent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChannel {
    kind: Pauli,
    p: f64,
    j: usize,
    n: usize,
    mode: NoiseMode,
}

impl NoiseChannel {
    /// `p·ρ + (1−p)·(σ^{⊗j} ⊗ 𝟙) ρ (σ^{⊗j} ⊗ 𝟙)`
    pub fn collective(kind: Pauli, p: f64, j: usize, n: usize) -> Result<Self> {
        validate(p, n)?;
        if j > n {
            return Err(Error::InvalidSpec(format!("affected qubits j = {j} exceeds n = {n}")));
        }
        Ok(Self {
            kind,
            p,
            j,
            n,
            mode: NoiseMode::Collective,
        })
    }

    pub fn independent(kind: Pauli, p: f64, n: usize) -> Result<Self> {
        validate(p, n)?;
        Ok(Self {
            kind,
            p,
            j: n,
            n,
            mode: NoiseMode::Independent,
        })
    }

    /// The identity channel, expressed as collective noise on zero qubits.
    pub fn identity(n: usize) -> Result<Self> {
        Self::collective(Pauli::Z, 1.0, 0, n)
    }

    pub fn kind(&self) -> Pauli {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    pub fn is_identity(&self) -> bool {
        self.p == 1.0 || (self.mode == NoiseMode::Collective && self.j == 0)
    }

    /// Short label such as `XX` (collective, j = 2) or `Z-ind`.
    pub fn label(&self) -> String {
        match self.mode {
            NoiseMode::Collective if self.j == 0 => "noiseless".to_string(),
            NoiseMode::Collective => std::iter::repeat_n(self.kind.symbol(), self.j).collect(),
            NoiseMode::Independent => format!("{}-ind", self.kind.symbol()),
        }
    }
}

fn validate(p: f64, n: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidSpec(format!("noise probability p = {p} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::InvalidN(0));
    }
    Ok(())
}

/// `σ^{⊗j} ⊗ 𝟙^{⊗(n−j)}`
pub fn pauli_word(kind: Pauli, j: usize, n: usize) -> ComplexMatrix {
    assert!(j <= n && n >= 1);
    let sigma = kind.matrix();
    let id = ComplexMatrix::identity(2);
    kron_all((0..n).map(|q| if q < j { &sigma } else { &id }))
}

/// `σ` on qubit `target` of `n`, identity elsewhere.
fn local_pauli(kind: Pauli, target: usize, n: usize) -> ComplexMatrix {
    let sigma = kind.matrix();
    let id = ComplexMatrix::identity(2);
    kron_all((0..n).map(|q| if q == target { &sigma } else { &id }))
}

/// `{√p·𝟙^{⊗n}, √(1−p)·σ^{⊗j} ⊗ 𝟙^{⊗(n−j)}}` for a collective channel.
pub fn kraus_ops(ch: &NoiseChannel) -> Result<Vec<ComplexMatrix>> {
    if ch.mode != NoiseMode::Collective {
        return Err(Error::WrongMode { expected: "collective" });
    }
    let dim = 1usize << ch.n;
    Ok(vec![
        ComplexMatrix::identity(dim).scale(ch.p.sqrt()),
        pauli_word(ch.kind, ch.j, ch.n).scale((1.0 - ch.p).sqrt()),
    ])
}

/// Kraus pair of the single-qubit channel used per qubit in independent mode.
pub fn single_qubit_kraus(kind: Pauli, p: f64) -> [ComplexMatrix; 2] {
    [
        ComplexMatrix::identity(2).scale(p.sqrt()),
        kind.matrix().scale((1.0 - p).sqrt()),
    ]
}

/// `Σ_k F_k† F_k`
pub fn completeness(ops: &[ComplexMatrix]) -> ComplexMatrix {
    let mut acc = ComplexMatrix::zeros(ops[0].dim());
    for f in ops {
        acc += &f.adjoint().matmul(f);
    }
    acc
}

fn mix_with_conjugate(p: f64, rho: &ComplexMatrix, word: &ComplexMatrix) -> ComplexMatrix {
    let mut out = rho.scale(p);
    out.add_scaled(1.0 - p, &rho.conjugate_by(word));
    out.hermitian_part()
}

pub fn apply_collective(ch: &NoiseChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if ch.mode != NoiseMode::Collective {
        return Err(Error::WrongMode { expected: "collective" });
    }
    if rho.n_qubits() != ch.n {
        return Err(Error::DimensionMismatch(1 << ch.n, rho.dim()));
    }
    if ch.is_identity() {
        return Ok(rho.clone());
    }
    let word = pauli_word(ch.kind, ch.j, ch.n);
    Ok(DensityMatrix::from_trusted(mix_with_conjugate(
        ch.p,
        rho.matrix(),
        &word,
    )))
}

/// Single-qubit noise on every qubit of `rho`, applied as a composition of
/// local channels. On product states this equals the tensor product of the
/// noisy factors.
pub fn apply_independent_state(kind: Pauli, p: f64, rho: &DensityMatrix) -> DensityMatrix {
    if p == 1.0 {
        return rho.clone();
    }
    let n = rho.n_qubits();
    let mut out = rho.matrix().clone();
    for q in 0..n {
        out = mix_with_conjugate(p, &out, &local_pauli(kind, q, n));
    }
    DensityMatrix::from_trusted(out)
}

/// Replaces each member by `⊗ᵢ [p·ρ_{xᵢ} + (1−p)·σ ρ_{xᵢ} σ]`.
pub fn apply_independent(kind: Pauli, p: f64, fam: &StateFamily) -> Result<StateFamily> {
    validate(p, fam.n_qubits())?;
    Ok(fam.map_states(|_, s| apply_independent_state(kind, p, s)))
}

/// The noisy family `P' = {ρ'_x}`, same labels and weights.
pub fn noisy_family(ch: &NoiseChannel, fam: &StateFamily) -> Result<StateFamily> {
    if ch.n != fam.n_qubits() {
        return Err(Error::DimensionMismatch(1 << ch.n, fam.dim()));
    }
    match ch.mode {
        NoiseMode::Collective => {
            if ch.is_identity() {
                return Ok(fam.clone());
            }
            let word = pauli_word(ch.kind, ch.j, ch.n);
            Ok(fam.map_states(|_, s| DensityMatrix::from_trusted(mix_with_conjugate(ch.p, s.matrix(), &word))))
        }
        NoiseMode::Independent => apply_independent(ch.kind, ch.p, fam),
    }
}

/// Noisy single-qubit factor `p·ρ + (1−p)·σρσ` as a density matrix.
pub fn noisy_qubit(kind: Pauli, p: f64, rho: &DensityMatrix) -> DensityMatrix {
    let s = kind.matrix();
    DensityMatrix::from_trusted(mix_with_conjugate(p, rho.matrix(), &s))
}

/// Tensor product of per-qubit Kraus operators for independent mode (`2^n` operators).
pub fn independent_kraus_ops(kind: Pauli, p: f64, n: usize) -> Vec<ComplexMatrix> {
    let single = single_qubit_kraus(kind, p);
    let mut ops = vec![ComplexMatrix::identity(1)];
    for _ in 0..n {
        ops = ops
            .iter()
            .flat_map(|acc| single.iter().map(move |f| kron(acc, f)))
            .collect();
    }
    ops
}
