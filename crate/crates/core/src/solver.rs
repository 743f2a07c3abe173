//! Penalized block Newton-Raphson for the smooth information criterion,
//! driven through a decreasing sequence of smoothing parameters.
//!
//! The objective is
//!
//! ```text
//! l_sic(theta) = l(theta) - log(n)/2 * (||beta_tail||_eps + ||alpha_tail||_eps + 2)
//! ```
//!
//! Each inner iteration solves the location and dispersion blocks
//! independently (cross-derivatives dropped) from the same current iterate.
//! A fit at one `eps` warm-starts the next.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SicError};
use crate::model::{
    linear_predictor, log_likelihood, to_dvector, weighted_gram_subset, Component, Dataset,
    ModelDerivatives, ParamVector,
};
use crate::penalty::{phi_derivatives, smooth_l0, Epsilon};

/// Smallest accepted reciprocal condition number of `X'X` at initialization.
pub const MIN_RCOND: f64 = 1e-12;

const RIDGE_START: f64 = 1e-8;
const RIDGE_MAX: f64 = 1e-2;

/// Geometric sequence `eps_t = eps_start * decay^(t-1)`, `t = 1..=steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelescopeSchedule {
    pub eps_start: Epsilon,
    pub eps_end: Epsilon,
    pub steps: usize,
    pub decay: f64,
}

impl TelescopeSchedule {
    /// Single-step schedule that fits once at a fixed `eps` (no telescoping).
    pub fn fixed(eps: Epsilon) -> Self {
        Self {
            eps_start: eps,
            eps_end: eps,
            steps: 1,
            decay: 1.0,
        }
    }

    pub fn epsilons(&self) -> Vec<Epsilon> {
        (0..self.steps)
            .map(|t| Epsilon::new(self.eps_start.value() * self.decay.powi(t as i32)).expect("positive by construction"))
            .collect()
    }
}

impl Default for TelescopeSchedule {
    fn default() -> Self {
        make_schedule(10.0, 1e-5, 100).expect("valid default schedule")
    }
}

pub fn make_schedule(eps_start: f64, eps_end: f64, steps: usize) -> Result<TelescopeSchedule> {
    if !(eps_start.is_finite() && eps_end.is_finite() && eps_end > 0.0 && eps_end < eps_start) {
        return Err(SicError::InvalidSchedule(format!(
            "need 0 < eps_end < eps_start, got start {eps_start}, end {eps_end}"
        )));
    }
    if steps < 2 {
        return Err(SicError::InvalidSchedule(format!("need at least 2 steps, got {steps}")));
    }
    let decay = (eps_end / eps_start).powf(1.0 / (steps as f64 - 1.0));
    Ok(TelescopeSchedule {
        eps_start: Epsilon::new(eps_start)?,
        eps_end: Epsilon::new(eps_end)?,
        steps,
        decay,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Inner-loop tolerance on the max-norm of the Newton update.
    pub tol: f64,
    pub max_inner_iters: usize,
    pub max_step_halvings: usize,
    /// Coefficients below this magnitude are treated as zero after fitting.
    pub zero_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_inner_iters: 200,
            max_step_halvings: 30,
            zero_tol: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.tol, self.zero_tol].iter().any(|v| v.is_nan() || *v <= 0.0) {
            return Err(SicError::InvalidArgument("tol and zero_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Coefficients allowed to move during a fit; everything else is held at 0.
/// Intercepts are always free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeSet {
    pub beta: Vec<usize>,
    pub alpha: Vec<usize>,
}

impl FreeSet {
    /// Every coefficient free (the full location-dispersion model).
    pub fn full(p: usize) -> Self {
        Self {
            beta: (0..=p).collect(),
            alpha: (0..=p).collect(),
        }
    }

    /// Location model with a constant dispersion.
    pub fn location_only(p: usize) -> Self {
        Self {
            beta: (0..=p).collect(),
            alpha: vec![0],
        }
    }

    /// Same set with coefficient `j` of `component` pinned at zero.
    pub fn without(&self, component: Component, j: usize) -> Result<Self> {
        if j == 0 {
            return Err(SicError::InvalidArgument("intercepts cannot be constrained".into()));
        }
        let mut out = self.clone();
        let v = match component {
            Component::Location => &mut out.beta,
            Component::Dispersion => &mut out.alpha,
        };
        let before = v.len();
        v.retain(|&k| k != j);
        if v.len() == before {
            return Err(SicError::InvalidArgument(format!("{component} coefficient {j} is not free")));
        }
        Ok(out)
    }

    pub fn get(&self, c: Component) -> &[usize] {
        match c {
            Component::Location => &self.beta,
            Component::Dispersion => &self.alpha,
        }
    }
}

/// Location-only versus full location-dispersion selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FitMode {
    #[serde(rename = "MPR-SIC")]
    Mpr,
    #[serde(rename = "SPR-SIC")]
    Spr,
}

impl FitMode {
    pub fn label(self) -> &'static str {
        match self {
            FitMode::Mpr => "MPR-SIC",
            FitMode::Spr => "SPR-SIC",
        }
    }

    pub fn free_set(self, p: usize) -> FreeSet {
        match self {
            FitMode::Mpr => FreeSet::full(p),
            FitMode::Spr => FreeSet::location_only(p),
        }
    }
}

impl std::str::FromStr for FitMode {
    type Err = SicError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MPR" | "MPR-SIC" => Ok(FitMode::Mpr),
            "SPR" | "SPR-SIC" => Ok(FitMode::Spr),
            _ => Err(SicError::InvalidArgument(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub eps: f64,
    pub theta: ParamVector,
    pub sic_value: f64,
    pub inner_iters: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    pub per_step: Vec<StepRecord>,
    pub final_theta: ParamVector,
    /// Whether the final step's inner loop converged.
    pub converged: bool,
}

impl FitTrace {
    pub fn final_eps(&self) -> Epsilon {
        Epsilon::new(self.per_step.last().expect("non-empty trace").eps).expect("valid eps")
    }
}

/// Outcome of one inner Newton loop.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub theta: ParamVector,
    pub iters: usize,
    pub converged: bool,
}

/// Penalized Newton right-hand sides and block-diagonal left-hand sides.
#[derive(Debug, Clone)]
pub struct PenalizedSystem {
    pub rhs_beta: Vec<f64>,
    pub rhs_alpha: Vec<f64>,
    pub lhs_beta: DMatrix<f64>,
    pub lhs_alpha: DMatrix<f64>,
}

fn penalty_weight(n: usize) -> f64 {
    0.5 * (n as f64).ln()
}

/// Smooth information criterion (to be maximized).
pub fn sic_objective(theta: &ParamVector, data: &Dataset, eps: Epsilon) -> Result<f64> {
    let ll = log_likelihood(theta, data)?;
    let card = smooth_l0(&theta.beta[1..], eps) + smooth_l0(&theta.alpha[1..], eps) + 2.0;
    Ok(ll - penalty_weight(data.n()) * card)
}

/// Penalized score and the RS block matrices over all coefficients.
pub fn sic_gradient_and_system(theta: &ParamVector, data: &Dataset, eps: Epsilon) -> Result<PenalizedSystem> {
    let all: Vec<usize> = (0..data.x.ncols()).collect();
    let d = ModelDerivatives::compute(theta, data)?;
    let (rhs_beta, lhs_beta, _) = block_system(data, &d, theta, eps, Component::Location, &all);
    let (rhs_alpha, lhs_alpha, _) = block_system(data, &d, theta, eps, Component::Dispersion, &all);
    Ok(PenalizedSystem {
        rhs_beta,
        rhs_alpha,
        lhs_beta,
        lhs_alpha,
    })
}

fn block_system(
    data: &Dataset,
    d: &ModelDerivatives,
    theta: &ParamVector,
    eps: Epsilon,
    component: Component,
    cols: &[usize],
) -> (Vec<f64>, DMatrix<f64>, Vec<f64>) {
    let (z, w) = match component {
        Component::Location => (&d.z_beta, &d.w_beta),
        Component::Dispersion => (&d.z_alpha, &d.w_alpha),
    };
    let coef = theta.component(component);
    let c = penalty_weight(data.n());
    let mut lhs = weighted_gram_subset(&data.x, w, cols);
    let mut rhs = Vec::with_capacity(cols.len());
    let mut curvature = vec![0.0; cols.len()];
    for (a, &j) in cols.iter().enumerate() {
        let g: f64 = data.x.column(j).iter().zip(z).map(|(x, z)| x * z).sum();
        if j == 0 {
            rhs.push(g);
        } else {
            let (d1, d2) = phi_derivatives(coef[j], eps);
            rhs.push(g - c * d1);
            curvature[a] = c * d2;
            lhs[(a, a)] += c * d2;
        }
    }
    (rhs, lhs, curvature)
}

/// Solves `lhs * step = rhs`. An indefinite `lhs` first gets an escalating
/// ridge; if that is not enough, the negative part of the penalty curvature
/// is dropped from the diagonal.
fn solve_block(lhs: DMatrix<f64>, curvature: &[f64], rhs: &[f64], component: Component) -> Result<Vec<f64>> {
    let b = to_dvector(rhs);
    if let Some(step) = solve_with_ridge(lhs.clone(), &b) {
        return Ok(step);
    }
    let mut convex = lhs;
    for (a, &k) in curvature.iter().enumerate() {
        convex[(a, a)] -= k.min(0.0);
    }
    solve_with_ridge(convex, &b).ok_or(SicError::NonPositiveDefinite {
        component: component.name(),
    })
}

fn solve_with_ridge(mut lhs: DMatrix<f64>, b: &nalgebra::DVector<f64>) -> Option<Vec<f64>> {
    if let Some(ch) = Cholesky::new(lhs.clone()) {
        return Some(ch.solve(b).as_slice().to_vec());
    }
    let scale = 1.0 + lhs.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut ridge = RIDGE_START;
    let mut applied = 0.0;
    while ridge <= RIDGE_MAX * (1.0 + 1e-9) {
        let add = ridge * scale - applied;
        for i in 0..lhs.nrows() {
            lhs[(i, i)] += add;
        }
        applied = ridge * scale;
        if let Some(ch) = Cholesky::<f64, Dyn>::new(lhs.clone()) {
            return Some(ch.solve(b).as_slice().to_vec());
        }
        ridge *= 10.0;
    }
    None
}

/// Least-squares start: `beta` from OLS, `alpha = (log s^2, 0, ..., 0)`.
pub fn initialize(data: &Dataset) -> Result<ParamVector> {
    initialize_free(data, &FreeSet::full(data.p()))
}

/// [`initialize`] with OLS restricted to the free location columns. The
/// residual variance divides by `n` minus the number of fitted location
/// coefficients.
pub fn initialize_free(data: &Dataset, free: &FreeSet) -> Result<ParamVector> {
    let cols = &free.beta;
    let ones = vec![1.0; data.n()];
    let gram = weighted_gram_subset(&data.x, &ones, cols);
    let eig = SymmetricEigen::new(gram.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
    let rcond = if hi > 0.0 { lo / hi } else { 0.0 };
    if rcond.is_nan() || rcond < MIN_RCOND {
        return Err(SicError::SingularDesign(rcond.max(0.0)));
    }
    let xty: Vec<f64> = cols
        .iter()
        .map(|&j| data.x.column(j).iter().zip(&data.y).map(|(a, b)| a * b).sum())
        .collect();
    let sol = Cholesky::new(gram)
        .ok_or(SicError::SingularDesign(rcond))?
        .solve(&to_dvector(&xty));

    let p = data.p();
    let mut beta = vec![0.0; p + 1];
    for (a, &j) in cols.iter().enumerate() {
        beta[j] = sol[a];
    }
    let fitted = linear_predictor(&data.x, &beta);
    let rss: f64 = data.y.iter().zip(&fitted).map(|(y, f)| (y - f).powi(2)).sum();
    let tss: f64 = data.y.iter().map(|y| y * y).sum();
    let dof = data.n() as f64 - cols.len() as f64;
    let s2 = rss / dof;
    if s2.is_nan() || s2 <= 0.0 || rss <= 1e-20 * tss.max(f64::MIN_POSITIVE) {
        return Err(SicError::DegenerateFit);
    }
    let mut alpha = vec![0.0; p + 1];
    alpha[0] = s2.ln();
    Ok(ParamVector { beta, alpha })
}

fn objective_or_neg_inf(theta: &ParamVector, data: &Dataset, eps: Epsilon) -> Result<f64> {
    match sic_objective(theta, data, eps) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) | Err(SicError::NumericalOverflow(_)) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Objective differences below this are indistinguishable from rounding.
fn roundoff(f: f64) -> f64 {
    16.0 * f64::EPSILON * (1.0 + f.abs())
}

/// Inner Newton loop at a fixed `eps` with all coefficients free.
pub fn newton_at_epsilon(theta0: &ParamVector, data: &Dataset, eps: Epsilon, cfg: &SolverConfig) -> Result<InnerResult> {
    newton_at_epsilon_free(theta0, data, eps, cfg, &FreeSet::full(data.p()))
}

/// Inner Newton loop updating only the coefficients in `free`.
///
/// A full step that lowers the objective (beyond rounding) is halved until it
/// does not; if no halving helps, or the halved step gains nothing beyond
/// rounding, the loop stops.
pub fn newton_at_epsilon_free(
    theta0: &ParamVector,
    data: &Dataset,
    eps: Epsilon,
    cfg: &SolverConfig,
    free: &FreeSet,
) -> Result<InnerResult> {
    theta0.check_dims(data)?;
    let mut theta = theta0.clone();
    let mut f_cur = objective_or_neg_inf(&theta, data, eps)?;
    if f_cur == f64::NEG_INFINITY {
        // Still raise the real diagnostic for the caller.
        sic_objective(&theta, data, eps)?;
    }

    for iter in 1..=cfg.max_inner_iters {
        let d = ModelDerivatives::compute(&theta, data)?;
        let (rb, lb, kb) = block_system(data, &d, &theta, eps, Component::Location, &free.beta);
        let (ra, la, ka) = block_system(data, &d, &theta, eps, Component::Dispersion, &free.alpha);
        let step_b = solve_block(lb, &kb, &rb, Component::Location)?;
        let step_a = solve_block(la, &ka, &ra, Component::Dispersion)?;
        let step_norm = step_b.iter().chain(&step_a).fold(0.0_f64, |m, v| m.max(v.abs()));
        if !step_norm.is_finite() {
            return Err(SicError::NonPositiveDefinite { component: "location/dispersion" });
        }

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_step_halvings {
            let mut trial = theta.clone();
            for (&j, s) in free.beta.iter().zip(&step_b) {
                trial.beta[j] += scale * s;
            }
            for (&j, s) in free.alpha.iter().zip(&step_a) {
                trial.alpha[j] += scale * s;
            }
            let f_trial = objective_or_neg_inf(&trial, data, eps)?;
            if f_trial >= f_cur - roundoff(f_cur) {
                accepted = Some((trial, f_trial));
                break;
            }
            scale *= 0.5;
        }

        match accepted {
            Some((trial, f_trial)) => {
                let stalled = scale < 1.0 && f_trial - f_cur <= roundoff(f_cur);
                theta = trial;
                f_cur = f_trial;
                if step_norm <= cfg.tol || stalled {
                    return Ok(InnerResult { theta, iters: iter, converged: true });
                }
            }
            None => {
                return Ok(InnerResult { theta, iters: iter, converged: true });
            }
        }
    }
    Ok(InnerResult {
        theta,
        iters: cfg.max_inner_iters,
        converged: false,
    })
}

/// Full location-dispersion fit through the schedule with warm starts.
pub fn telescope_fit(data: &Dataset, schedule: &TelescopeSchedule, cfg: &SolverConfig) -> Result<FitTrace> {
    fit_free(data, schedule, cfg, &FreeSet::full(data.p()))
}

/// Location-only fit: the dispersion is a single free intercept.
pub fn fit_spr(data: &Dataset, schedule: &TelescopeSchedule, cfg: &SolverConfig) -> Result<FitTrace> {
    fit_free(data, schedule, cfg, &FreeSet::location_only(data.p()))
}

pub fn fit_mode(data: &Dataset, schedule: &TelescopeSchedule, cfg: &SolverConfig, mode: FitMode) -> Result<FitTrace> {
    fit_free(data, schedule, cfg, &mode.free_set(data.p()))
}

/// Telescope fit with everything outside `free` held at zero.
pub fn fit_free(data: &Dataset, schedule: &TelescopeSchedule, cfg: &SolverConfig, free: &FreeSet) -> Result<FitTrace> {
    cfg.validate()?;
    let mut theta = initialize_free(data, free)?;
    let mut per_step = Vec::with_capacity(schedule.steps);
    for (t, eps) in schedule.epsilons().into_iter().enumerate() {
        let wrap = |e: SicError| SicError::AtStep {
            step: t + 1,
            eps: eps.value(),
            source: Box::new(e),
        };
        let inner = newton_at_epsilon_free(&theta, data, eps, cfg, free).map_err(wrap)?;
        let sic_value = sic_objective(&inner.theta, data, eps).map_err(wrap)?;
        theta = inner.theta;
        per_step.push(StepRecord {
            eps: eps.value(),
            theta: theta.clone(),
            sic_value,
            inner_iters: inner.iters,
            converged: inner.converged,
        });
    }
    let converged = per_step.last().is_some_and(|s| s.converged);
    Ok(FitTrace {
        per_step,
        final_theta: theta,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ingest, ScalingInfo};
    use approx::assert_relative_eq;

    fn eps(v: f64) -> Epsilon {
        Epsilon::new(v).unwrap()
    }

    fn intercept_only(y: &[f64]) -> Dataset {
        Dataset {
            y: y.to_vec(),
            x: DMatrix::from_element(y.len(), 1, 1.0),
            scaling: ScalingInfo::identity(0),
        }
    }

    #[test]
    fn schedule_matches_reported_decay() {
        let s = make_schedule(10.0, 1e-5, 100).unwrap();
        assert!((s.decay - 0.8695).abs() < 5e-4);
        let e = s.epsilons();
        assert_eq!(e.len(), 100);
        assert_eq!(e[0].value(), 10.0);
        assert!((e[99].value() / 1e-5 - 1.0).abs() < 1e-12);
        assert!(e.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn two_point_schedule() {
        let s = make_schedule(10.0, 0.1, 2).unwrap();
        assert_relative_eq!(s.decay, 0.01, max_relative = 1e-15);
        let e: Vec<f64> = s.epsilons().iter().map(|e| e.value()).collect();
        assert_eq!(e[0], 10.0);
        assert_relative_eq!(e[1], 0.1, max_relative = 1e-15);
    }

    #[test]
    fn invalid_schedules() {
        assert!(matches!(make_schedule(1.0, 1.0, 5), Err(SicError::InvalidSchedule(_))));
        assert!(matches!(make_schedule(1.0, 2.0, 5), Err(SicError::InvalidSchedule(_))));
        assert!(matches!(make_schedule(1.0, 0.0, 5), Err(SicError::InvalidSchedule(_))));
        assert!(matches!(make_schedule(1.0, 0.5, 1), Err(SicError::InvalidSchedule(_))));
    }

    #[test]
    fn objective_with_zero_tails() {
        let raw = DMatrix::from_column_slice(4, 1, &[0.5, 1.0, -0.3, 2.0]);
        let d = ingest(&raw, &[1.0, 0.0, 2.0, 1.5], false).unwrap();
        let theta = ParamVector::new(vec![0.4, 0.0], vec![0.1, 0.0]).unwrap();
        let ll = log_likelihood(&theta, &d).unwrap();
        let v = sic_objective(&theta, &d, eps(0.3)).unwrap();
        assert_relative_eq!(v, ll - 4f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn objective_single_row_is_likelihood() {
        let d = intercept_only(&[0.7]);
        let theta = ParamVector::new(vec![0.2], vec![0.3]).unwrap();
        assert_eq!(sic_objective(&theta, &d, eps(1.0)).unwrap(), log_likelihood(&theta, &d).unwrap());
    }

    #[test]
    fn initialize_intercept_only() {
        let theta = initialize(&intercept_only(&[1.0, 2.0, 3.0])).unwrap();
        assert_relative_eq!(theta.beta[0], 2.0, epsilon = 1e-14);
        assert!(theta.alpha[0].abs() < 1e-14);
    }

    #[test]
    fn initialize_errors() {
        let raw = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let d = ingest(&raw, &[1.0, 2.0, 3.0], false).unwrap();
        assert_eq!(initialize(&d), Err(SicError::DegenerateFit));

        let raw = DMatrix::from_column_slice(5, 2, &[1.0, 2.0, 3.0, 5.0, 4.0, 1.0, 2.0, 3.0, 5.0, 4.0]);
        let d = ingest(&raw, &[1.0, 0.0, 3.0, 2.0, 2.5], false).unwrap();
        assert!(matches!(initialize(&d), Err(SicError::SingularDesign(_))));
    }

    #[test]
    fn newton_at_stationary_point_stops_immediately() {
        let y = [0.3, -1.2, 2.5, 0.7, 1.1];
        let d = intercept_only(&y);
        let mean = y.iter().sum::<f64>() / 5.0;
        let msr = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
        let theta = ParamVector::new(vec![mean], vec![msr.ln()]).unwrap();
        let out = newton_at_epsilon(&theta, &d, eps(1.0), &SolverConfig::default()).unwrap();
        assert_eq!(out.iters, 1);
        assert!(out.converged);
        assert!((out.theta.beta[0] - mean).abs() < 1e-8);
        assert!((out.theta.alpha[0] - msr.ln()).abs() < 1e-8);
    }

    #[test]
    fn one_rs_step_keeps_ols_when_weights_are_constant() {
        // n = 1 is excluded by the data contract; a huge eps makes the penalty
        // vanish instead, so the location block is plain least squares.
        let raw = DMatrix::from_column_slice(6, 2, &[0.1, 0.5, -0.4, 1.3, 0.9, -1.1, 1.0, -0.2, 0.3, 0.8, -0.6, 0.4]);
        let y = [0.4, 1.1, -0.3, 2.2, 1.0, -0.8];
        let d = ingest(&raw, &y, false).unwrap();
        let theta0 = initialize(&d).unwrap();
        let cfg = SolverConfig {
            max_inner_iters: 1,
            ..SolverConfig::default()
        };
        let out = newton_at_epsilon(&theta0, &d, eps(1e9), &cfg).unwrap();
        for j in 0..3 {
            assert!((out.theta.beta[j] - theta0.beta[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn without_rejects_intercept_and_repeats() {
        let f = FreeSet::full(3);
        assert!(f.without(Component::Location, 0).is_err());
        let g = f.without(Component::Dispersion, 2).unwrap();
        assert_eq!(g.alpha, vec![0, 1, 3]);
        assert!(g.without(Component::Dispersion, 2).is_err());
    }
}
