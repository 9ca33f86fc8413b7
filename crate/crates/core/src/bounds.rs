//! Closed-form onsets of the zero region and the lifting construction that
//! turns a small-system measurement into one for a family with extra noisy
//! qubits.

use crate::error::{Error, Result};
use crate::linalg::{kron, ComplexMatrix};
use crate::sdp::{Povm, POVM_TOL};

/// Onset data for one qubit count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTable {
    pub n: usize,
    /// Smallest angle for which the noiseless family is antidistinguishable.
    pub theta_min: f64,
    /// `sin(theta_min)`, the trace distance of the single-qubit pair at onset.
    pub d_n: f64,
}

/// `2·arctan(2^{1/n} − 1)`
pub fn theta_min(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidN(n));
    }
    Ok(2.0 * (2f64.powf(1.0 / n as f64) - 1.0).atan())
}

/// `sin(theta_min(n))`
pub fn onset_sin(n: usize) -> Result<f64> {
    Ok(theta_min(n)?.sin())
}

/// Rows for `n = 1..=max_n`.
pub fn bound_table(max_n: usize) -> Result<Vec<BoundTable>> {
    (1..=max_n)
        .map(|n| {
            let theta = theta_min(n)?;
            Ok(BoundTable {
                n,
                theta_min: theta,
                d_n: theta.sin(),
            })
        })
        .collect()
}

/// Extends a POVM on `n_small` qubits by one leading qubit.
///
/// Each effect `E_k` becomes `½(𝟙₂ ⊗ E_k)` twice: outcome `b·K + k` for
/// `b ∈ {0, 1}`, i.e. the bitstrings that prepend the new qubit's bit to `k`.
/// The new qubit is ignored, so the lifted σ on a family whose first qubit is
/// arbitrarily noisy equals the small-system σ.
pub fn lift_measurement(m_small: &Povm, n_small: usize) -> Result<Povm> {
    let dim = 1usize << n_small;
    if m_small.dim() != dim {
        return Err(Error::InvalidPovm(format!(
            "effects have dimension {} but {n_small} qubits need {dim}",
            m_small.dim()
        )));
    }
    m_small.validate(POVM_TOL)?;
    let half_identity = ComplexMatrix::identity(2).scale(0.5);
    let lifted: Vec<ComplexMatrix> = m_small.effects().iter().map(|e| kron(&half_identity, e)).collect();
    let mut effects = lifted.clone();
    effects.extend(lifted);
    Povm::from_effects_unchecked(effects)
}

/// Applies [`lift_measurement`] `extra` times.
pub fn lift_measurement_by(m_small: &Povm, n_small: usize, extra: usize) -> Result<Povm> {
    let mut povm = m_small.clone();
    for step in 0..extra {
        povm = lift_measurement(&povm, n_small + step)?;
    }
    Ok(povm)
}

/// Analytical upper bound on the onset of an `n`-qubit family whose first `j`
/// qubits are noisy: the noiseless onset of the remaining `n − j` qubits.
/// `None` when no qubit is left untouched.
pub fn lifted_onset_bound(n: usize, j: usize) -> Result<Option<f64>> {
    if n < 1 || j > n {
        return Err(Error::InvalidN(n));
    }
    if j == n {
        Ok(None)
    } else {
        onset_sin(n - j).map(Some)
    }
}
