//! The conclusive-exclusion SDP
//!
//! ```text
//! minimize    σ(E) = Σₓ Tr(Eₓ ρₓ)
//! subject to  Eₓ ⪰ 0,  Σₓ Eₓ = 𝟙
//! ```
//!
//! solved by ADMM that alternates between the affine set `Σₓ Eₓ = 𝟙` (closed
//! form) and the product of PSD cones (one eigendecomposition per effect).
//!
//! The dual is `maximize Tr(Y) subject to ρₓ − Y ⪰ 0`. Any Hermitian `Y`
//! can be made feasible by shifting it down by the most negative eigenvalue of
//! `ρₓ − Y`, which gives the lower bounds reported as `dual_value`.
//!
//! The objective is minimized with unit weights. The weighted quantities
//! (`ρ̃ₓ = wₓρₓ`, the optimality test and the exclusion probability) use the
//! family's prior. For the uniform prior the two problems share minimizers.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, eig_hermitian_seeded, psd_from_eig, ComplexMatrix, HermitianEig, Matrix, RealMatrix, Scalar, C64,
};
use crate::states::StateFamily;

/// Tolerance for effect positivity and completeness.
pub const POVM_TOL: f64 = 1e-8;

/// A candidate exclusion measurement: effect `x` is paired with state `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    /// Validated POVM (PSD effects summing to identity within [`POVM_TOL`]).
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let povm = Self::from_effects_unchecked(effects)?;
        povm.validate(POVM_TOL)?;
        Ok(povm)
    }

    /// Skips the positivity and completeness checks but still requires a
    /// non-empty list of equally sized effects.
    pub fn from_effects_unchecked(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let first = effects.first().ok_or_else(|| Error::InvalidPovm("no effects".into()))?;
        let dim = first.dim();
        if let Some(bad) = effects.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch(dim, bad.dim()));
        }
        Ok(Self { effects })
    }

    /// `K` copies of `𝟙/K`.
    pub fn uniform(count: usize, dim: usize) -> Self {
        let e = ComplexMatrix::identity(dim).scale(1.0 / count as f64);
        Self {
            effects: vec![e; count],
        }
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn into_effects(self) -> Vec<ComplexMatrix> {
        self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    /// `‖Σ E − 𝟙‖_F`
    pub fn completeness_error(&self) -> f64 {
        let mut sum = ComplexMatrix::identity(self.dim()).scale(-1.0);
        for e in &self.effects {
            sum += e;
        }
        sum.frobenius_norm()
    }

    /// Smallest eigenvalue over all effects.
    pub fn min_effect_eigenvalue(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for e in &self.effects {
            lo = lo.min(eig_hermitian(e)?.min_value());
        }
        Ok(lo)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let min_eig = self.min_effect_eigenvalue()?;
        if min_eig < -tol {
            return Err(Error::InvalidPovm(format!(
                "effect eigenvalue {min_eig:.3e} below -{tol:.0e}"
            )));
        }
        let comp = self.completeness_error();
        if comp > tol {
            return Err(Error::InvalidPovm(format!(
                "completeness error {comp:.3e} above {tol:.0e}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub eps_primal: f64,
    pub eps_dual: f64,
    /// ADMM penalty parameter.
    pub admm_rho: f64,
    /// Over-relaxation factor in `[1, 1.8]`. Values above 1 slow the
    /// accelerated iteration down on degenerate instances.
    pub over_relaxation: f64,
    /// `σ` at or below this value counts as zero.
    pub zero_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            eps_primal: 1e-9,
            eps_dual: 1e-9,
            admm_rho: 1.0,
            over_relaxation: 1.0,
            zero_threshold: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.eps_primal, self.eps_dual, self.admm_rho, self.zero_threshold];
        if positive.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidSpec(
                "solver tolerances and penalty must be positive".into(),
            ));
        }
        if !(1.0..=1.8).contains(&self.over_relaxation) {
            return Err(Error::InvalidSpec(format!(
                "over-relaxation {} outside [1, 1.8]",
                self.over_relaxation
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidSpec("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Unit-weight objective `Σₓ Tr(Eₓρₓ)` at the returned POVM.
    pub sigma: f64,
    /// `σ^{1/n}`.
    pub sigma_root: f64,
    pub povm: Povm,
    /// Certified lower bound on the unit-weight minimum.
    pub dual_value: f64,
    /// `sigma − dual_value`
    pub gap: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Both optimality conditions hold at the default tolerance.
    pub optimality_ok: bool,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn is_zero(&self, cfg: &SolverConfig) -> bool {
        self.sigma <= cfg.zero_threshold
    }
}

/// Tolerance used for [`SolveReport::optimality_ok`].
pub const OPTIMALITY_TOL: f64 = 1e-6;

fn check_pairing(povm: &Povm, fam: &StateFamily) -> Result<()> {
    if povm.len() != fam.len() {
        return Err(Error::IndexCountMismatch {
            effects: povm.len(),
            states: fam.len(),
        });
    }
    if povm.dim() != fam.dim() {
        return Err(Error::DimensionMismatch(povm.dim(), fam.dim()));
    }
    Ok(())
}

/// `Σₓ Tr(Eₓ ρₓ)`
pub fn sigma_value(povm: &Povm, fam: &StateFamily) -> Result<f64> {
    check_pairing(povm, fam)?;
    Ok(povm
        .effects
        .iter()
        .zip(fam.states())
        .map(|(e, s)| e.real_trace_product(s.matrix()))
        .sum())
}

/// `σ^{1/n}` with `0^{1/n} = 0`.
pub fn sigma_root(sigma: f64, n: usize) -> f64 {
    let s = sigma.max(0.0);
    if s == 0.0 {
        0.0
    } else {
        s.powf(1.0 / n as f64)
    }
}

/// `P_o = 1 − Σₓ wₓ Tr(ρₓ Eₓ)`
pub fn exclusion_probability(fam: &StateFamily, povm: &Povm) -> Result<f64> {
    check_pairing(povm, fam)?;
    let miss: f64 = povm
        .effects
        .iter()
        .zip(fam.states())
        .zip(fam.weights())
        .map(|((e, s), w)| w * e.real_trace_product(s.matrix()))
        .sum();
    Ok(1.0 - miss)
}

/// Lower bound `Tr(Y) − dim·t` from a Hermitian dual candidate `Y`, where `t`
/// is the smallest shift making every `ρₓ − Y + t𝟙` PSD.
fn shifted_dual(fam: &StateFamily, y: &ComplexMatrix) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for s in fam.states() {
        let slack = s.matrix() - y;
        worst = worst.min(eig_hermitian(&slack.hermitian_part())?.min_value());
    }
    let shift = (-worst).max(0.0);
    Ok(y.trace().re - shift * fam.dim() as f64)
}

/// `N = Σₓ cₓ ρₓ Eₓ` with per-state coefficients.
fn weighted_n(fam: &StateFamily, povm: &Povm, coeff: impl Fn(usize) -> f64) -> ComplexMatrix {
    let mut n = ComplexMatrix::zeros(fam.dim());
    for (i, (s, e)) in fam.states().iter().zip(povm.effects()).enumerate() {
        n.add_scaled(coeff(i), &s.matrix().matmul(e));
    }
    n
}

/// Certified lower bound on `min Σₓ Tr(Eₓρₓ)` built from `N = Σₓ ρₓEₓ`.
///
/// `Y = (N + N†)/2` is shifted down until `ρₓ − Y ⪰ 0` for every `x`, so the
/// returned `Tr(Y)` is a valid bound for any input POVM. It is tight when
/// `povm` is optimal.
pub fn dual_bound(fam: &StateFamily, povm: &Povm) -> Result<f64> {
    check_pairing(povm, fam)?;
    let n = weighted_n(fam, povm, |_| 1.0);
    shifted_dual(fam, &n.hermitian_part())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityCheck {
    pub hermitian_ok: bool,
    pub psd_ok: bool,
    /// `‖N − N†‖_F`
    pub hermitian_defect: f64,
    /// `min_x λ_min(ρ̃ₓ − N_sym)`
    pub min_slack_eigenvalue: f64,
}

impl OptimalityCheck {
    pub fn passed(&self) -> bool {
        self.hermitian_ok && self.psd_ok
    }
}

/// Necessary and sufficient optimality test for an exclusion POVM:
/// `N = Σᵢ ρ̃ᵢEᵢ` must be Hermitian and every `ρ̃ᵢ − N` must be PSD, with
/// `ρ̃ᵢ = wᵢρᵢ`. Positivity is evaluated on the Hermitian part of `N`.
pub fn check_optimality(fam: &StateFamily, povm: &Povm, tol: f64) -> Result<OptimalityCheck> {
    check_pairing(povm, fam)?;
    let weights = fam.weights();
    let n = weighted_n(fam, povm, |i| weights[i]);
    let hermitian_defect = n.hermitian_defect();
    let n_sym = n.hermitian_part();
    let mut min_slack = f64::INFINITY;
    for (s, &w) in fam.states().iter().zip(weights) {
        let slack = &s.matrix().scale(w) - &n_sym;
        min_slack = min_slack.min(eig_hermitian(&slack.hermitian_part())?.min_value());
    }
    Ok(OptimalityCheck {
        hermitian_ok: hermitian_defect <= tol,
        psd_ok: min_slack >= -tol,
        hermitian_defect,
        min_slack_eigenvalue: min_slack,
    })
}

const PENALTY_UPDATE_EVERY: usize = 100;
const PENALTY_BALANCE: f64 = 10.0;
const PENALTY_STEP: f64 = 2.0;

/// Minimizes `Σₓ Tr(Eₓρₓ)` over POVMs with `K = |family|` effects.
///
/// Starts from `Eₓ = 𝟙/K`. Reaching `max_iters` is reported through
/// [`SolveReport::status`], not as an error. When every `ρₓ` is real the
/// iterations run in real arithmetic; the optimum is then real as well.
pub fn solve(fam: &StateFamily, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let real: Option<Vec<RealMatrix>> = fam.states().iter().map(|s| s.matrix().as_real()).collect();
    let run = match real {
        Some(costs) => admm(&costs, cfg)?.into_complex(),
        None => {
            let costs: Vec<ComplexMatrix> = fam.states().iter().map(|s| s.matrix().clone()).collect();
            admm(&costs, cfg)?
        }
    };

    let povm = restore_completeness(run.z)?;
    let sigma = sigma_value(&povm, fam)?.max(0.0);
    let dual_value = dual_bound(fam, &povm)?.max(shifted_dual(fam, &run.y)?);
    let optimality = check_optimality(fam, &povm, OPTIMALITY_TOL)?;
    Ok(SolveReport {
        sigma,
        sigma_root: sigma_root(sigma, fam.n_qubits()),
        povm,
        dual_value,
        gap: sigma - dual_value,
        iterations: run.iterations,
        primal_residual: run.primal_residual,
        dual_residual: run.dual_residual,
        optimality_ok: optimality.passed(),
        status: run.status,
    })
}

/// Penalty actually used by the iterations. Effects shrink like `1/K` while
/// the costs stay of unit trace, so the well-scaled penalty falls like `1/K²`.
fn effective_penalty(admm_rho: f64, k: usize) -> f64 {
    admm_rho * 4.0 / (k * k) as f64
}

struct AdmmRun<T> {
    z: Vec<Matrix<T>>,
    y: Matrix<T>,
    iterations: usize,
    primal_residual: f64,
    dual_residual: f64,
    status: SolveStatus,
}

impl AdmmRun<f64> {
    fn into_complex(self) -> AdmmRun<C64> {
        AdmmRun {
            z: self.z.iter().map(RealMatrix::to_complex).collect(),
            y: self.y.to_complex(),
            iterations: self.iterations,
            primal_residual: self.primal_residual,
            dual_residual: self.dual_residual,
            status: self.status,
        }
    }
}

/// Since `Σ Eₓ = 𝟙`, replacing every `ρₓ` by `(ρₓ − ρ̄)/s` changes the
/// objective by an affine map only. Centering on the mean state and scaling to
/// unit spread keeps the iterations well conditioned when the states are
/// nearly equal. Returns the new costs together with `ρ̄` and `s`.
fn center_costs<T: Scalar>(costs: &[Matrix<T>]) -> (Vec<Matrix<T>>, Matrix<T>, f64) {
    let k = costs.len();
    let mut mean = Matrix::zeros(costs[0].dim());
    for c in costs {
        mean.add_scaled(1.0 / k as f64, c);
    }
    let spread = costs.iter().map(|c| c.distance(&mean)).fold(0.0, f64::max);
    let scale = if spread > 0.0 { spread } else { 1.0 };
    let centered = costs
        .iter()
        .map(|c| {
            let mut d = c - &mean;
            d.scale_in_place(1.0 / scale);
            d
        })
        .collect();
    (centered, mean, scale)
}

fn admm<T: Scalar>(raw_costs: &[Matrix<T>], cfg: &SolverConfig) -> Result<AdmmRun<T>> {
    let (costs, mean_cost, cost_scale) = center_costs(raw_costs);
    let k = costs.len();
    let dim = costs[0].dim();
    let mut cost_sum = Matrix::zeros(dim);
    for c in &costs {
        cost_sum += c;
    }
    let mut map = AdmmMap {
        costs: &costs,
        identity: Matrix::identity(dim),
        alpha: cfg.over_relaxation,
        bases: vec![None; k],
    };
    let mut anderson = Anderson::new(ANDERSON_MEMORY);

    let mut penalty = effective_penalty(cfg.admm_rho, k);
    let mut x = vec![map.identity.scale(1.0 / k as f64); k];
    x.extend(vec![Matrix::zeros(dim); k]);
    let mut current = map.step(&x, penalty)?;
    let mut evaluations = 1;
    let mut since_penalty_update = 0;
    let mut status = SolveStatus::MaxIters;
    let (mut primal_residual, mut dual_residual);

    loop {
        primal_residual = current.primal_sq.sqrt();
        // reported in the units of the original costs
        dual_residual = cost_scale * penalty * current.change_sq.sqrt();
        if primal_residual <= cfg.eps_primal && dual_residual <= cfg.eps_dual {
            status = SolveStatus::Converged;
            break;
        }
        if evaluations >= cfg.max_iters {
            break;
        }

        since_penalty_update += 1;
        if since_penalty_update >= PENALTY_UPDATE_EVERY {
            since_penalty_update = 0;
            let scaled_dual = dual_residual / cost_scale;
            let factor = if primal_residual > PENALTY_BALANCE * scaled_dual {
                PENALTY_STEP
            } else if scaled_dual > PENALTY_BALANCE * primal_residual {
                1.0 / PENALTY_STEP
            } else {
                1.0
            };
            if factor != 1.0 {
                // the fixed-point map changes with the penalty
                penalty *= factor;
                for ux in x[k..].iter_mut() {
                    ux.scale_in_place(1.0 / factor);
                }
                anderson.reset();
                current = map.step(&x, penalty)?;
                evaluations += 1;
                continue;
            }
        }

        let g = difference(&current.next, &x);
        let g_norm = norm(&g);
        let plain = std::mem::take(&mut current.next);
        match anderson.extrapolate(&x, &g) {
            Some(candidate) => {
                let trial = map.step(&candidate, penalty)?;
                evaluations += 1;
                if norm(&difference(&trial.next, &candidate)) <= ANDERSON_SAFEGUARD * g_norm {
                    x = candidate;
                    current = trial;
                } else {
                    anderson.reset();
                    x = plain;
                    current = map.step(&x, penalty)?;
                    evaluations += 1;
                }
            }
            None => {
                x = plain;
                current = map.step(&x, penalty)?;
                evaluations += 1;
            }
        }
    }

    let (z, u) = current.next.split_at(k);
    let mut y = affine_multiplier(z, u, &cost_sum, penalty, &map.identity);
    y.scale_in_place(cost_scale);
    y += &mean_cost;
    Ok(AdmmRun {
        z: z.to_vec(),
        y,
        iterations: evaluations,
        primal_residual,
        dual_residual,
        status,
    })
}

/// Extrapolation depth of the Anderson accelerator.
const ANDERSON_MEMORY: usize = 10;
/// Relative Tikhonov term in the Anderson least-squares problem.
const ANDERSON_REGULARIZATION: f64 = 1e-10;
/// An extrapolated point is kept only if its fixed-point residual is no larger
/// than this multiple of the plain step's.
const ANDERSON_SAFEGUARD: f64 = 1.0;

/// Largest extrapolation accepted, relative to the plain step length.
const ANDERSON_MAX_SHIFT: f64 = 1e3;

/// Result of one ADMM pass. `next` holds `Z` followed by `U`.
struct Step<T> {
    next: Vec<Matrix<T>>,
    primal_sq: f64,
    change_sq: f64,
}

/// The ADMM iteration viewed as a map on the stacked state `(Z, U)`.
struct AdmmMap<'a, T> {
    costs: &'a [Matrix<T>],
    identity: Matrix<T>,
    alpha: f64,
    /// Last eigenbasis per effect, reused as a warm start.
    bases: Vec<Option<Matrix<T>>>,
}

impl<T: Scalar> AdmmMap<'_, T> {
    fn step(&mut self, state: &[Matrix<T>], penalty: f64) -> Result<Step<T>> {
        let k = self.costs.len();
        let (z, u) = state.split_at(k);
        let dim = self.identity.dim();

        // E-step: project Z − U − C/ρ onto Σ E = 𝟙
        let mut e = Vec::with_capacity(k);
        let mut total = Matrix::zeros(dim);
        for x in 0..k {
            let mut v = &z[x] - &u[x];
            v.add_scaled(-1.0 / penalty, &self.costs[x]);
            total += &v;
            e.push(v);
        }
        let mut correction = &self.identity - &total;
        correction.scale_in_place(1.0 / k as f64);

        // Z-step on the relaxed point, then the scaled dual update
        let mut next_z = Vec::with_capacity(k);
        let mut next_u = Vec::with_capacity(k);
        let (mut primal_sq, mut change_sq) = (0.0, 0.0);
        for x in 0..k {
            e[x] += &correction;
            let mut relaxed = e[x].scale(self.alpha);
            relaxed.add_scaled(1.0 - self.alpha, &z[x]);
            relaxed += &u[x];
            // extrapolated states can drift off the Hermitian subspace by rounding
            let mut target = relaxed.hermitian_part();
            let eig = decompose(&target, self.bases[x].as_ref())?;
            let z_new = psd_from_eig(&eig);
            self.bases[x] = Some(eig.vectors);
            primal_sq += e[x].distance(&z_new).powi(2);
            change_sq += z[x].distance(&z_new).powi(2);
            target -= &z_new;
            next_u.push(target);
            next_z.push(z_new);
        }
        next_z.extend(next_u);
        Ok(Step {
            next: next_z,
            primal_sq,
            change_sq,
        })
    }
}

fn difference<T: Scalar>(a: &[Matrix<T>], b: &[Matrix<T>]) -> Vec<Matrix<T>> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn inner<T: Scalar>(a: &[Matrix<T>], b: &[Matrix<T>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.real_inner(y)).sum()
}

fn norm<T: Scalar>(a: &[Matrix<T>]) -> f64 {
    inner(a, a).sqrt()
}

type Stacked<T> = Vec<Matrix<T>>;

/// Type-II Anderson acceleration for a fixed-point map `x ↦ x + g(x)`.
struct Anderson<T> {
    memory: usize,
    dx: VecDeque<Stacked<T>>,
    dg: VecDeque<Stacked<T>>,
    /// Last `(x, g(x))`.
    previous: Option<(Stacked<T>, Stacked<T>)>,
}

impl<T: Scalar> Anderson<T> {
    fn new(memory: usize) -> Self {
        Self {
            memory,
            dx: VecDeque::with_capacity(memory),
            dg: VecDeque::with_capacity(memory),
            previous: None,
        }
    }

    fn reset(&mut self) {
        self.dx.clear();
        self.dg.clear();
        self.previous = None;
    }

    /// Records `(x, g(x))` and returns the extrapolated next point, or `None`
    /// while there is no history.
    fn extrapolate(&mut self, x: &[Matrix<T>], g: &[Matrix<T>]) -> Option<Vec<Matrix<T>>> {
        if let Some((px, pg)) = self.previous.take() {
            if self.dx.len() == self.memory {
                self.dx.pop_front();
                self.dg.pop_front();
            }
            self.dx.push_back(difference(x, &px));
            self.dg.push_back(difference(g, &pg));
        }
        self.previous = Some((x.to_vec(), g.to_vec()));
        let m = self.dg.len();
        if m == 0 {
            return None;
        }
        let mut gram = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            rhs[i] = inner(&self.dg[i], g);
            for j in 0..=i {
                let v = inner(&self.dg[i], &self.dg[j]);
                gram[i * m + j] = v;
                gram[j * m + i] = v;
            }
        }
        let scale = (0..m).map(|i| gram[i * m + i]).fold(0.0, f64::max);
        if !(scale > 0.0) {
            return None;
        }
        for i in 0..m {
            gram[i * m + i] += ANDERSON_REGULARIZATION * scale;
        }
        let gamma = solve_spd(&mut gram, &mut rhs, m)?;

        let mut shift: Vec<Matrix<T>> = x.iter().map(|a| Matrix::zeros(a.dim())).collect();
        for (i, &w) in gamma.iter().enumerate() {
            for (o, (sx, sg)) in shift.iter_mut().zip(self.dx[i].iter().zip(&self.dg[i])) {
                o.add_scaled(-w, sx);
                o.add_scaled(-w, sg);
            }
        }
        // a near-singular history can produce huge or non-finite weights
        let shift_norm = norm(&shift);
        if !(shift_norm <= ANDERSON_MAX_SHIFT * norm(g)) {
            return None;
        }
        Some(x.iter().zip(g).zip(shift).map(|((a, b), c)| &(a + b) + &c).collect())
    }
}

/// Cholesky solve of a small symmetric positive definite system in place.
fn solve_spd(a: &mut [f64], b: &mut [f64], m: usize) -> Option<Vec<f64>> {
    for j in 0..m {
        let mut d = a[j * m + j];
        for p in 0..j {
            d -= a[j * m + p] * a[j * m + p];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in (j + 1)..m {
            let mut v = a[i * m + j];
            for p in 0..j {
                v -= a[i * m + p] * a[j * m + p];
            }
            a[i * m + j] = v / d;
        }
    }
    for i in 0..m {
        let mut v = b[i];
        for p in 0..i {
            v -= a[i * m + p] * b[p];
        }
        b[i] = v / a[i * m + i];
    }
    for i in (0..m).rev() {
        let mut v = b[i];
        for p in (i + 1)..m {
            v -= a[p * m + i] * b[p];
        }
        b[i] = v / a[i * m + i];
    }
    Some(b.to_vec())
}

fn decompose<T: Scalar>(a: &Matrix<T>, basis: Option<&Matrix<T>>) -> Result<HermitianEig<T>> {
    match basis {
        Some(b) => eig_hermitian_seeded(a, b),
        None => eig_hermitian(a),
    }
}

/// `Y = (ρ(𝟙 − Σ(Z − U)) + Σ C) / K`, the Lagrange multiplier of `Σ E = 𝟙`
/// in the E-step evaluated at the current iterate.
fn affine_multiplier<T: Scalar>(
    z: &[Matrix<T>],
    u: &[Matrix<T>],
    cost_sum: &Matrix<T>,
    penalty: f64,
    identity: &Matrix<T>,
) -> Matrix<T> {
    let mut resid = identity.clone();
    for (zx, ux) in z.iter().zip(u) {
        resid -= zx;
        resid += ux;
    }
    let mut y = resid.scale(penalty);
    y += cost_sum;
    y.scale(1.0 / z.len() as f64).hermitian_part()
}

/// Maps PSD effects `Zₓ` with `S = Σ Zₓ ≈ 𝟙` to `S^{-1/2} Zₓ S^{-1/2}`, which
/// is PSD and complete up to rounding.
fn restore_completeness(z: Vec<ComplexMatrix>) -> Result<Povm> {
    let dim = z[0].dim();
    let mut total = ComplexMatrix::zeros(dim);
    for zx in &z {
        total += zx;
    }
    let eig = eig_hermitian(&total)?;
    if eig.min_value() <= 0.0 {
        return Err(Error::InvalidPovm(format!(
            "effect sum is singular (min eigenvalue {:.3e})",
            eig.min_value()
        )));
    }
    let inv_sqrt = eig.reconstruct_with(|v| 1.0 / v.sqrt());
    let effects = z
        .iter()
        .map(|zx| inv_sqrt.matmul(zx).matmul(&inv_sqrt).hermitian_part())
        .collect();
    Povm::from_effects_unchecked(effects)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, C64};
    use crate::states::{build_family, theta_from_sin};
    use std::f64::consts::FRAC_PI_2;

    const NEAR_HALF_PI: f64 = FRAC_PI_2 - 1e-9;

    fn swap_povm() -> Povm {
        // effect 0 is orthogonal to |+⟩, effect 1 to |−⟩
        let h = 0.5;
        let minus = ComplexMatrix::from_fn(2, |i, j| C64::new(if i == j { h } else { -h }, 0.0));
        let plus = ComplexMatrix::from_fn(2, |_, _| C64::new(h, 0.0));
        Povm::new(vec![minus, plus]).unwrap()
    }

    #[test]
    fn uniform_povm_gives_unit_sigma() {
        let fam = build_family(0.8, 3).unwrap();
        let povm = Povm::uniform(8, 8);
        assert!((sigma_value(&povm, &fam).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_family_forces_unit_sigma() {
        let fam = build_family(0.0, 2).unwrap();
        // any POVM: a projective one in a rotated basis
        let h = ComplexMatrix::from_fn(2, |i, j| {
            C64::new(if i == 1 && j == 1 { -1.0 } else { 1.0 } / 2f64.sqrt(), 0.0)
        });
        let u = kron(&h, &h);
        let effects: Vec<_> = (0..4)
            .map(|i| {
                let mut p = ComplexMatrix::zeros(4);
                p[(i, i)] = C64::new(1.0, 0.0);
                p.conjugate_by(&u)
            })
            .collect();
        let povm = Povm::new(effects).unwrap();
        assert!((sigma_value(&povm, &fam).unwrap() - 1.0).abs() < 1e-14);
        let p_o = exclusion_probability(&fam, &povm).unwrap();
        assert!((p_o - 0.75).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_pair_is_perfectly_excluded() {
        let fam = build_family(NEAR_HALF_PI, 1).unwrap();
        let povm = swap_povm();
        assert!(sigma_value(&povm, &fam).unwrap().abs() < 1e-12);
        assert!((exclusion_probability(&fam, &povm).unwrap() - 1.0).abs() < 1e-12);
        let bound = dual_bound(&fam, &povm).unwrap();
        assert!(bound.abs() <= 1e-10, "bound {bound}");
    }

    #[test]
    fn pairing_errors() {
        let fam = build_family(0.4, 2).unwrap();
        assert!(matches!(
            sigma_value(&Povm::uniform(3, 4), &fam),
            Err(Error::IndexCountMismatch { effects: 3, states: 4 })
        ));
        assert!(matches!(
            sigma_value(&Povm::uniform(4, 2), &fam),
            Err(Error::DimensionMismatch(2, 4))
        ));
        assert!(exclusion_probability(&fam, &Povm::uniform(2, 4)).is_err());
        assert!(check_optimality(&fam, &Povm::uniform(2, 4), 1e-6).is_err());
    }

    #[test]
    fn povm_validation() {
        assert!(Povm::new(vec![ComplexMatrix::identity(2)]).is_ok());
        let bad = vec![
            ComplexMatrix::from_real_diagonal(&[1.5, 0.5]),
            ComplexMatrix::from_real_diagonal(&[-0.5, 0.5]),
        ];
        assert!(matches!(Povm::new(bad), Err(Error::InvalidPovm(_))));
        let incomplete = vec![ComplexMatrix::from_real_diagonal(&[0.5, 0.5]); 3];
        assert!(matches!(Povm::new(incomplete), Err(Error::InvalidPovm(_))));
        assert!(matches!(Povm::new(vec![]), Err(Error::InvalidPovm(_))));
    }

    #[test]
    fn uniform_povm_is_optimal_for_constant_family() {
        for n in 1..=3 {
            let fam = build_family(0.0, n).unwrap();
            let povm = Povm::uniform(1 << n, 1 << n);
            let check = check_optimality(&fam, &povm, 1e-6).unwrap();
            assert!(check.passed(), "{check:?}");
            let bound = dual_bound(&fam, &povm).unwrap();
            assert!((1.0 - 1e-6..=1.0 + 1e-12).contains(&bound), "bound {bound}");
        }
    }

    #[test]
    fn solver_at_constant_family_returns_start() {
        let fam = build_family(0.0, 2).unwrap();
        let rep = solve(&fam, &SolverConfig::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        assert!((rep.sigma - 1.0).abs() < 1e-12);
        let start = ComplexMatrix::identity(4).scale(0.25);
        assert!(rep.povm.effects().iter().all(|e| e.distance(&start) < 1e-12));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.over_relaxation = 1.9;
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig {
            eps_primal: 0.0,
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sigma_root_convention() {
        assert_eq!(sigma_root(0.0, 3), 0.0);
        assert_eq!(sigma_root(-1e-18, 3), 0.0);
        assert!((sigma_root(0.125, 3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_qubit_solve_beyond_and_below_onset() {
        let cfg = SolverConfig::default();
        let above = build_family(theta_from_sin(0.8), 2).unwrap();
        let rep = solve(&above, &cfg).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged, "{rep:?}");
        assert!(rep.sigma <= cfg.zero_threshold, "sigma {}", rep.sigma);
        assert!(rep.gap <= 1e-6 && rep.optimality_ok);
        rep.povm.validate(POVM_TOL).unwrap();

        let below = build_family(theta_from_sin(0.5), 2).unwrap();
        let rep = solve(&below, &cfg).unwrap();
        assert!(rep.sigma > 0.01, "sigma {}", rep.sigma);
        assert!(rep.gap <= 1e-6 && rep.optimality_ok, "{rep:?}");
    }

    #[test]
    fn perturbed_povm_fails_optimality() {
        let fam = build_family(theta_from_sin(0.8), 2).unwrap();
        let rep = solve(&fam, &SolverConfig::default()).unwrap();
        assert!(check_optimality(&fam, &rep.povm, 1e-6).unwrap().passed());
        let mut effects = rep.povm.clone().into_effects();
        effects.swap(0, 3);
        let swapped = Povm::new(effects).unwrap();
        let check = check_optimality(&fam, &swapped, 1e-6).unwrap();
        assert!(!check.psd_ok, "{check:?}");
        // the certificate stays a valid lower bound for any POVM
        assert!(dual_bound(&fam, &swapped).unwrap() <= sigma_value(&swapped, &fam).unwrap() + 1e-12);
    }

    #[test]
    fn single_qubit_optimum_is_one_minus_sin() {
        // 1 + λ_min(ρ₀ − ρ₁), and the difference has eigenvalues ±sin θ
        let cfg = SolverConfig::default();
        for i in 1..20 {
            let theta = FRAC_PI_2 * i as f64 / 20.0;
            let rep = solve(&build_family(theta, 1).unwrap(), &cfg).unwrap();
            assert!(
                (rep.sigma - (1.0 - theta.sin())).abs() < 1e-8,
                "θ = {theta}: {}",
                rep.sigma
            );
        }
    }

    #[test]
    fn weak_duality_on_noisy_families() {
        use crate::channels::{noisy_family, NoiseChannel};
        use crate::linalg::Pauli;
        let cfg = SolverConfig::default();
        for (kind, j, s) in [(Pauli::Y, 1, 0.45), (Pauli::X, 2, 0.3), (Pauli::Z, 3, 0.9)] {
            let ch = NoiseChannel::collective(kind, 0.3, j, 3).unwrap();
            let fam = noisy_family(&ch, &build_family(theta_from_sin(s), 3).unwrap()).unwrap();
            let rep = solve(&fam, &cfg).unwrap();
            assert_eq!(rep.status, SolveStatus::Converged);
            assert!(rep.dual_value <= rep.sigma + 1e-9 && rep.gap <= 1e-6, "{rep:?}");
            assert!(dual_bound(&fam, &rep.povm).unwrap() <= rep.sigma + 1e-9);
            rep.povm.validate(POVM_TOL).unwrap();
        }
    }

    #[test]
    fn small_cholesky_solve() {
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![2.0, 1.0];
        let x = solve_spd(&mut a, &mut b, 2).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
        assert!(solve_spd(&mut [0.0], &mut [1.0], 1).is_none());
    }
}
