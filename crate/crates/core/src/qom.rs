//! Finite ontological models.
//!
//! Ontic spaces are finite sets `{0, …, L−1}`, so epistemic states are
//! probability vectors and response functions are stochastic matrices. This is
//! enough to exercise the overlap identities, which are pointwise statements.

use crate::error::{Error, Result};
use crate::sdp::{sigma_value, Povm};
use crate::states::{index_bits, StateFamily};

/// Normalization tolerance for distributions and responses.
pub const DIST_TOL: f64 = 1e-12;

/// Default cap on the size of an enumerated product space.
pub const DEFAULT_PRODUCT_CAP: usize = 1_000_000;

/// Probability vector `μ(λ)` over a finite ontic space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteEpistemicState {
    probs: Vec<f64>,
}

impl DiscreteEpistemicState {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty ontic space".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("entry {bad} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > DIST_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(Self { probs })
    }

    /// Rescales nonnegative weights to a distribution.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution("weights have no mass".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    /// Point mass at `lambda`.
    pub fn point(lambda_size: usize, lambda: usize) -> Result<Self> {
        if lambda >= lambda_size {
            return Err(Error::LengthMismatch(lambda, lambda_size));
        }
        let mut probs = vec![0.0; lambda_size];
        probs[lambda] = 1.0;
        Self::new(probs)
    }

    pub fn lambda_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Response functions `ξ_k(λ)`: outcome `k` given ontic state `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteResponse {
    lambda_size: usize,
    outcomes: Vec<Vec<f64>>,
}

impl DiscreteResponse {
    /// `outcomes[k][λ]`; every column must sum to one.
    pub fn new(outcomes: Vec<Vec<f64>>) -> Result<Self> {
        let lambda_size = outcomes.first().map(Vec::len).unwrap_or(0);
        if lambda_size == 0 {
            return Err(Error::InvalidDistribution(
                "response has no outcomes or no ontic states".into(),
            ));
        }
        for row in &outcomes {
            if row.len() != lambda_size {
                return Err(Error::LengthMismatch(row.len(), lambda_size));
            }
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidDistribution("response value outside [0, 1]".into()));
            }
        }
        for lambda in 0..lambda_size {
            let total: f64 = outcomes.iter().map(|row| row[lambda]).sum();
            if (total - 1.0).abs() > DIST_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "responses at λ = {lambda} sum to {total}"
                )));
            }
        }
        Ok(Self { lambda_size, outcomes })
    }

    pub fn lambda_size(&self) -> usize {
        self.lambda_size
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcome(&self, k: usize) -> &[f64] {
        &self.outcomes[k]
    }

    /// `Σ_λ μ(λ) ξ_k(λ)`
    pub fn probability(&self, mu: &DiscreteEpistemicState, k: usize) -> Result<f64> {
        if mu.lambda_size() != self.lambda_size {
            return Err(Error::LengthMismatch(mu.lambda_size(), self.lambda_size));
        }
        Ok(mu.probs.iter().zip(&self.outcomes[k]).map(|(m, x)| m * x).sum())
    }
}

/// `w = Σ_λ min_x μ_x(λ)`
pub fn overlap_w(mus: &[DiscreteEpistemicState]) -> Result<f64> {
    let first = mus
        .first()
        .ok_or_else(|| Error::InvalidDistribution("overlap of an empty list".into()))?;
    let size = first.lambda_size();
    if let Some(other) = mus.iter().find(|m| m.lambda_size() != size) {
        return Err(Error::LengthMismatch(other.lambda_size(), size));
    }
    let w = (0..size)
        .map(|l| mus.iter().map(|m| m.probs[l]).fold(f64::INFINITY, f64::min))
        .sum::<f64>();
    Ok(w.clamp(0.0, 1.0))
}

/// Product distribution `μ_{x₁}(λ₁)⋯μ_{x_n}(λ_n)` over `Λ₁ × ⋯ × Λ_n`,
/// enumerated lexicographically with `λ₁` most significant.
pub fn product_model(
    mus_per_qubit: &[(DiscreteEpistemicState, DiscreteEpistemicState)],
    bits: &[u8],
) -> Result<DiscreteEpistemicState> {
    product_model_capped(mus_per_qubit, bits, DEFAULT_PRODUCT_CAP)
}

pub fn product_model_capped(
    mus_per_qubit: &[(DiscreteEpistemicState, DiscreteEpistemicState)],
    bits: &[u8],
    cap: usize,
) -> Result<DiscreteEpistemicState> {
    if mus_per_qubit.len() != bits.len() {
        return Err(Error::LengthMismatch(mus_per_qubit.len(), bits.len()));
    }
    if bits.is_empty() {
        return Err(Error::InvalidN(0));
    }
    for (m0, m1) in mus_per_qubit {
        if m0.lambda_size() != m1.lambda_size() {
            return Err(Error::LengthMismatch(m0.lambda_size(), m1.lambda_size()));
        }
    }
    let size: u128 = mus_per_qubit.iter().map(|(m, _)| m.lambda_size() as u128).product();
    if size > cap as u128 {
        return Err(Error::SizeOverflow { size, cap });
    }
    let mut probs = vec![1.0];
    for ((m0, m1), &bit) in mus_per_qubit.iter().zip(bits) {
        let factor = if bit == 0 { m0 } else { m1 };
        probs = probs
            .iter()
            .flat_map(|&p| factor.probs.iter().map(move |&q| p * q))
            .collect();
    }
    // products of normalized vectors stay normalized up to rounding
    DiscreteEpistemicState::normalized(probs)
}

/// Both sides of the product law for overlaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductLaw {
    /// Overlap of all `2ⁿ` product distributions, by enumeration.
    pub lhs: f64,
    /// Product of the per-qubit overlaps, `w(μ₀, μ₁)ⁿ` for identical factors.
    pub rhs: f64,
}

impl ProductLaw {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs().max(f64::MIN_POSITIVE)
    }

    /// Equality within `tol`, relative, or absolute when both sides vanish.
    pub fn holds(&self, tol: f64) -> bool {
        (self.lhs - self.rhs).abs() <= tol * self.lhs.abs().max(self.rhs.abs()) || (self.lhs == 0.0 && self.rhs == 0.0)
    }
}

/// Compares `w({μ_x⃗})` with `Πᵢ w(μ₀ⁱ, μ₁ⁱ)` on `n` qubits.
///
/// `mus_per_qubit` holds either one pair, used for every qubit, or exactly `n`.
pub fn lemma1_check(
    mus_per_qubit: &[(DiscreteEpistemicState, DiscreteEpistemicState)],
    n: usize,
) -> Result<ProductLaw> {
    if n == 0 {
        return Err(Error::InvalidN(0));
    }
    let pairs: Vec<_> = match mus_per_qubit.len() {
        1 => vec![mus_per_qubit[0].clone(); n],
        len if len == n => mus_per_qubit.to_vec(),
        len => return Err(Error::LengthMismatch(len, n)),
    };
    let size: u128 = pairs.iter().map(|(m, _)| m.lambda_size() as u128).product::<u128>() << n;
    if size > DEFAULT_PRODUCT_CAP as u128 {
        return Err(Error::SizeOverflow {
            size,
            cap: DEFAULT_PRODUCT_CAP,
        });
    }
    let products = (0..1usize << n)
        .map(|x| product_model(&pairs, &index_bits(x, n)))
        .collect::<Result<Vec<_>>>()?;
    let lhs = overlap_w(&products)?;
    let rhs = pairs
        .iter()
        .map(|(m0, m1)| overlap_w(&[m0.clone(), m1.clone()]))
        .product::<Result<f64>>()?;
    Ok(ProductLaw { lhs, rhs })
}

/// Outcome of comparing an ontological model's overlap with `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapBound {
    pub w: f64,
    pub sigma: f64,
    /// `maxₓ |Σ_λ μₓ(λ) ξₓ(λ) − Tr(Eₓρₓ)|`
    pub born_error: f64,
    /// Number of outcomes `K`.
    pub outcomes: usize,
}

impl OverlapBound {
    /// Allowed excess of `w` over `σ`: `2ᴷ · born_error`.
    pub fn slack(&self) -> f64 {
        2f64.powi(self.outcomes as i32) * self.born_error
    }

    pub fn holds(&self) -> bool {
        self.w <= self.sigma + self.slack() + DIST_TOL
    }
}

/// Evaluates `w ≤ σ` for a model `(μₓ, ξ)` of the family measured with `povm`.
pub fn lemma2_gap(
    mus: &[DiscreteEpistemicState],
    xis: &DiscreteResponse,
    fam: &StateFamily,
    povm: &Povm,
) -> Result<OverlapBound> {
    let k = fam.len();
    if mus.len() != k {
        return Err(Error::LengthMismatch(mus.len(), k));
    }
    if xis.outcome_count() != povm.len() {
        return Err(Error::LengthMismatch(xis.outcome_count(), povm.len()));
    }
    let sigma = sigma_value(povm, fam)?;
    let mut born_error: f64 = 0.0;
    for (x, mu) in mus.iter().enumerate() {
        let model = xis.probability(mu, x)?;
        let quantum = povm.effects()[x].real_trace_product(fam.state(x).matrix());
        born_error = born_error.max((model - quantum).abs());
    }
    Ok(OverlapBound {
        w: overlap_w(mus)?,
        sigma,
        born_error,
        outcomes: xis.outcome_count(),
    })
}

/// An exact model of the statistics `p(k|x) = Tr(E_k ρ_x)` with as much
/// overlap as outcome-determined ontic states allow.
///
/// `Λ` has `K` shared points followed by `K·K` private ones indexed
/// `(x, k)`. The shared point `k` carries `min_y p(k|y)` under every
/// preparation; the private point `(x, k)` carries the rest of `p(k|x)`.
/// Every `λ` determines its outcome, so the model reproduces all statistics
/// and its overlap is `Σ_k min_y p(k|y)`.
pub fn outcome_model(fam: &StateFamily, povm: &Povm) -> Result<(Vec<DiscreteEpistemicState>, DiscreteResponse)> {
    let k = povm.len();
    let probs: Vec<Vec<f64>> = fam
        .states()
        .iter()
        .map(|rho| {
            povm.effects()
                .iter()
                .map(|e| e.real_trace_product(rho.matrix()).max(0.0))
                .collect()
        })
        .collect();
    let shared: Vec<f64> = (0..k)
        .map(|o| probs.iter().map(|row| row[o]).fold(f64::INFINITY, f64::min))
        .collect();
    let size = k + fam.len() * k;
    let mus = probs
        .iter()
        .enumerate()
        .map(|(x, row)| {
            let mut w = vec![0.0; size];
            w[..k].copy_from_slice(&shared);
            for o in 0..k {
                w[k + x * k + o] = row[o] - shared[o];
            }
            DiscreteEpistemicState::normalized(w)
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes = (0..k)
        .map(|o| {
            (0..size)
                .map(|l| {
                    let determined = if l < k { l } else { (l - k) % k };
                    if determined == o {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok((mus, DiscreteResponse::new(outcomes)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::build_family;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> DiscreteEpistemicState {
        DiscreteEpistemicState::new(v.to_vec()).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let a = dist(&[0.2, 0.3, 0.5]);
        assert!((overlap_w(&[a.clone(), a.clone()]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(overlap_w(&[dist(&[1.0, 0.0]), dist(&[0.0, 1.0])]).unwrap(), 0.0);
        let w = overlap_w(&[dist(&[0.5, 0.5, 0.0]), dist(&[0.0, 0.5, 0.5])]).unwrap();
        assert!((w - 0.5).abs() < 1e-15);
        assert!(matches!(
            overlap_w(&[a, dist(&[1.0])]),
            Err(Error::LengthMismatch(1, 3))
        ));
        assert!(overlap_w(&[]).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteEpistemicState::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteEpistemicState::new(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteEpistemicState::new(vec![]).is_err());
        assert!(DiscreteResponse::new(vec![vec![0.5, 1.0], vec![0.5, 0.0]]).is_ok());
        assert!(DiscreteResponse::new(vec![vec![0.5, 1.0], vec![0.4, 0.0]]).is_err());
        assert!(DiscreteResponse::new(vec![vec![0.5, 1.0], vec![0.5]]).is_err());
    }

    #[test]
    fn product_examples() {
        let m0 = dist(&[0.25, 0.75]);
        let m1 = dist(&[0.6, 0.4]);
        let single = product_model(&[(m0.clone(), m1.clone())], &[1]).unwrap();
        assert_eq!(single, m1);

        let pa = DiscreteEpistemicState::point(3, 2).unwrap();
        let pb = DiscreteEpistemicState::point(3, 1).unwrap();
        let prod = product_model(&[(pa.clone(), pa), (pb.clone(), pb)], &[0, 0]).unwrap();
        assert_eq!(prod, DiscreteEpistemicState::point(9, 2 * 3 + 1).unwrap());

        let half = (dist(&[0.5, 0.5, 0.0]), dist(&[0.0, 0.5, 0.5]));
        let law = lemma1_check(&[half], 2).unwrap();
        assert!((law.lhs - 0.25).abs() < 1e-15);
        assert!((law.rhs - 0.25).abs() < 1e-15);
    }

    #[test]
    fn product_size_cap() {
        let pair = (dist(&[0.5, 0.5]), dist(&[1.0, 0.0]));
        let pairs = vec![pair; 21];
        let err = product_model(&pairs, &[0; 21]).unwrap_err();
        assert!(matches!(
            err,
            Error::SizeOverflow {
                size: 2_097_152,
                cap: 1_000_000
            }
        ));
        assert!(product_model_capped(&pairs[..3], &[0, 1, 0], 7).is_err());
    }

    #[test]
    fn lemma1_degenerate_cases() {
        let disjoint = (dist(&[1.0, 0.0]), dist(&[0.0, 1.0]));
        let same = (dist(&[0.3, 0.7]), dist(&[0.3, 0.7]));
        for n in 1..=4 {
            let law = lemma1_check(std::slice::from_ref(&disjoint), n).unwrap();
            assert_eq!((law.lhs, law.rhs), (0.0, 0.0));
            assert!(law.holds(1e-10));
            let law = lemma1_check(std::slice::from_ref(&same), n).unwrap();
            assert!((law.lhs - 1.0).abs() < 1e-12 && (law.rhs - 1.0).abs() < 1e-12);
        }
        assert!(lemma1_check(&[same.clone(), same], 3).is_err());
    }

    #[test]
    fn lemma2_trivial_model() {
        let fam = build_family(0.0, 1).unwrap();
        let povm = Povm::uniform(2, 2);
        let mus = vec![DiscreteEpistemicState::point(1, 0).unwrap(); 2];
        let xis = DiscreteResponse::new(vec![vec![0.5], vec![0.5]]).unwrap();
        let report = lemma2_gap(&mus, &xis, &fam, &povm).unwrap();
        assert_eq!(report.born_error, 0.0);
        assert!((report.w - 1.0).abs() < 1e-15 && (report.sigma - 1.0).abs() < 1e-15);
        assert!(report.holds());
    }

    #[test]
    fn lemma2_ontic_model() {
        let fam = build_family(std::f64::consts::FRAC_PI_2 - 1e-9, 1).unwrap();
        let h = 0.5;
        let minus = crate::linalg::ComplexMatrix::from_fn(2, |i, j| (if i == j { h } else { -h }).into());
        let plus = crate::linalg::ComplexMatrix::from_fn(2, |_, _| h.into());
        let povm = Povm::new(vec![minus, plus]).unwrap();
        let (mus, xis) = outcome_model(&fam, &povm).unwrap();
        let report = lemma2_gap(&mus, &xis, &fam, &povm).unwrap();
        assert!(report.w < 1e-9);
        assert!(report.born_error < 1e-12);
        assert!(report.holds());
    }

    #[test]
    fn outcome_model_reproduces_statistics() {
        let fam = build_family(0.6, 2).unwrap();
        let povm = crate::sdp::solve(&fam, &Default::default()).unwrap().povm;
        let (mus, xis) = outcome_model(&fam, &povm).unwrap();
        for (x, rho) in fam.states().iter().enumerate() {
            for k in 0..povm.len() {
                let q = povm.effects()[k].real_trace_product(rho.matrix());
                assert!((xis.probability(&mus[x], k).unwrap() - q).abs() < 1e-12);
            }
        }
        let report = lemma2_gap(&mus, &xis, &fam, &povm).unwrap();
        assert!(report.born_error < 1e-12);
        assert!(report.w <= report.sigma + 1e-12);
    }

    fn distribution(len: usize) -> impl Strategy<Value = DiscreteEpistemicState> {
        proptest::collection::vec(0.0f64..1.0, len)
            .prop_filter("needs mass", |v| v.iter().sum::<f64>() > 1e-3)
            .prop_map(|v| DiscreteEpistemicState::normalized(v).unwrap())
    }

    proptest! {
        #[test]
        fn overlap_is_symmetric_and_shrinks(
            (a, b, c) in (1usize..8).prop_flat_map(|l| (distribution(l), distribution(l), distribution(l)))
        ) {
            let two = overlap_w(&[a.clone(), b.clone()]).unwrap();
            prop_assert!((two - overlap_w(&[b.clone(), a.clone()]).unwrap()).abs() < 1e-15);
            let three = overlap_w(&[a.clone(), b.clone(), c.clone()]).unwrap();
            prop_assert!((three - overlap_w(&[c, b, a]).unwrap()).abs() < 1e-15);
            prop_assert!(three <= two + 1e-15);
            prop_assert!((0.0..=1.0).contains(&three));
        }

        #[test]
        fn product_law_holds(
            (a, b) in (1usize..6).prop_flat_map(|l| (distribution(l), distribution(l))),
            n in 1usize..4,
        ) {
            let law = lemma1_check(&[(a, b)], n).unwrap();
            prop_assert!(law.holds(1e-10), "{law:?}");
        }
    }
}
