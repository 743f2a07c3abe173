//! Post-fit inference: active sets, sandwich standard errors, BIC and
//! per-coefficient BIC deltas, prediction intervals and coverage.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, SicError};
use crate::model::{
    ingest, log_likelihood, observed_information, unstandardize, Component, Dataset, ParamVector,
};
use crate::penalty::{phi_derivatives, Epsilon};
use crate::solver::{fit_free, FitMode, FitTrace, SolverConfig, TelescopeSchedule};

/// Indices per component with `|coef| >= zero_tol`, intercept always included.
pub fn active_set(theta: &ParamVector, zero_tol: f64) -> (Vec<usize>, Vec<usize>) {
    let pick = |v: &[f64]| -> Vec<usize> {
        v.iter()
            .enumerate()
            .filter(|&(j, c)| j == 0 || c.abs() >= zero_tol)
            .map(|(j, _)| j)
            .collect()
    };
    (pick(&theta.beta), pick(&theta.alpha))
}

/// Copy of `theta` with every non-intercept coefficient below `zero_tol` set to 0.
pub fn threshold(theta: &ParamVector, zero_tol: f64) -> ParamVector {
    let cut = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(j, &c)| if j > 0 && c.abs() < zero_tol { 0.0 } else { c })
            .collect()
    };
    ParamVector {
        beta: cut(&theta.beta),
        alpha: cut(&theta.alpha),
    }
}

/// Sandwich covariance `I^-1 I0 I^-1` over the active coordinates, ordered
/// as active location indices followed by active dispersion indices.
///
/// `I` is the full penalized information (cross block included), restricted
/// to the active rows and columns before inversion.
pub fn sandwich_covariance(
    theta: &ParamVector,
    data: &Dataset,
    eps: Epsilon,
    active_beta: &[usize],
    active_alpha: &[usize],
) -> Result<DMatrix<f64>> {
    let k = data.x.ncols();
    let info0 = observed_information(theta, data)?;
    let c = 0.5 * (data.n() as f64).ln();
    let coords: Vec<usize> = active_beta
        .iter()
        .copied()
        .chain(active_alpha.iter().map(|&j| j + k))
        .collect();
    let m = coords.len();
    let i0 = DMatrix::from_fn(m, m, |a, b| info0[(coords[a], coords[b])]);
    let mut pen = i0.clone();
    for (a, &g) in coords.iter().enumerate() {
        let j = g % k;
        if j == 0 {
            continue;
        }
        let coef = if g < k { theta.beta[j] } else { theta.alpha[j] };
        pen[(a, a)] += c * phi_derivatives(coef, eps).1;
    }
    let inv = pen.try_inverse().ok_or(SicError::SingularInformation)?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(SicError::SingularInformation);
    }
    let cov = &inv * i0 * &inv;
    Ok((&cov + cov.transpose()) * 0.5)
}

/// `-2 l + log(n) * (k_beta + k_alpha + 2)` with exact nonzero counts.
pub fn bic(theta: &ParamVector, data: &Dataset, zero_tol: f64) -> Result<f64> {
    let t = threshold(theta, zero_tol);
    let ll = log_likelihood(&t, data)?;
    let (ab, aa) = active_set(&t, zero_tol);
    let params = (ab.len() + aa.len()) as f64;
    Ok(-2.0 * ll + (data.n() as f64).ln() * params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaBic {
    pub component: Component,
    pub index: usize,
    pub value: f64,
}

/// Everything reported for one fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub mode: FitMode,
    pub theta_std: ParamVector,
    /// Original scale, inactive coefficients exactly zero.
    pub theta_orig: ParamVector,
    pub active_beta: Vec<usize>,
    pub active_alpha: Vec<usize>,
    /// Standard errors aligned with `active_beta` / `active_alpha`, original scale.
    pub se_beta: Vec<f64>,
    pub se_alpha: Vec<f64>,
    pub bic: f64,
    pub delta_bic: Vec<DeltaBic>,
    pub trace: FitTrace,
}

impl FitResult {
    pub fn se(&self, component: Component, j: usize) -> Option<f64> {
        let (act, se) = match component {
            Component::Location => (&self.active_beta, &self.se_beta),
            Component::Dispersion => (&self.active_alpha, &self.se_alpha),
        };
        act.iter().position(|&k| k == j).map(|pos| se[pos])
    }

    pub fn active(&self, component: Component) -> &[usize] {
        match component {
            Component::Location => &self.active_beta,
            Component::Dispersion => &self.active_alpha,
        }
    }

    pub fn delta(&self, component: Component, j: usize) -> Option<f64> {
        self.delta_bic
            .iter()
            .find(|d| d.component == component && d.index == j)
            .map(|d| d.value)
    }
}

/// Active sets, standard errors and BIC for a completed telescope fit.
/// BIC deltas are left empty; see [`fill_delta_bic`].
pub fn summarize(data: &Dataset, trace: FitTrace, mode: FitMode, cfg: &SolverConfig) -> Result<FitResult> {
    let eps = trace.final_eps();
    let theta_std = threshold(&trace.final_theta, cfg.zero_tol);
    let (active_beta, active_alpha) = active_set(&theta_std, cfg.zero_tol);
    let cov = sandwich_covariance(&trace.final_theta, data, eps, &active_beta, &active_alpha)?;
    let sd = &data.scaling.sd;
    let scale = |j: usize| if j == 0 || !data.scaling.scaled { 1.0 } else { sd[j - 1] };
    let mut se_beta = Vec::with_capacity(active_beta.len());
    let mut se_alpha = Vec::with_capacity(active_alpha.len());
    for (a, &j) in active_beta.iter().enumerate() {
        se_beta.push(cov[(a, a)].max(0.0).sqrt() / scale(j));
    }
    let off = active_beta.len();
    for (a, &j) in active_alpha.iter().enumerate() {
        se_alpha.push(cov[(off + a, off + a)].max(0.0).sqrt() / scale(j));
    }
    let bic = bic(&theta_std, data, cfg.zero_tol)?;
    Ok(FitResult {
        mode,
        theta_orig: unstandardize(&theta_std, &data.scaling),
        theta_std,
        active_beta,
        active_alpha,
        se_beta,
        se_alpha,
        bic,
        delta_bic: Vec::new(),
        trace,
    })
}

/// Telescope fit followed by [`summarize`].
pub fn fit_model(data: &Dataset, schedule: &TelescopeSchedule, cfg: &SolverConfig, mode: FitMode) -> Result<FitResult> {
    let trace = fit_free(data, schedule, cfg, &mode.free_set(data.p()))?;
    summarize(data, trace, mode, cfg)
}

/// BIC increase when coefficient `j` of `component` is pinned at zero and the
/// model is refitted through the whole schedule.
pub fn delta_bic(
    data: &Dataset,
    full_fit: &FitResult,
    component: Component,
    j: usize,
    schedule: &TelescopeSchedule,
    cfg: &SolverConfig,
) -> Result<f64> {
    if j == 0 || !full_fit.active(component).contains(&j) {
        return Err(SicError::InvalidArgument(format!(
            "{component} coefficient {j} is not an active non-intercept coefficient"
        )));
    }
    let free = full_fit.mode.free_set(data.p()).without(component, j)?;
    let trace = fit_free(data, schedule, cfg, &free)?;
    let constrained = bic(&trace.final_theta, data, cfg.zero_tol)?;
    Ok(constrained - full_fit.bic)
}

/// Computes [`delta_bic`] for every active non-intercept coefficient.
pub fn fill_delta_bic(data: &Dataset, fit: &mut FitResult, schedule: &TelescopeSchedule, cfg: &SolverConfig) -> Result<()> {
    let mut out = Vec::new();
    for component in Component::BOTH {
        for &j in fit.active(component).iter().filter(|&&j| j > 0) {
            let value = delta_bic(data, fit, component, j, schedule, cfg)?;
            out.push(DeltaBic { component, index: j, value });
        }
    }
    fit.delta_bic = out;
    Ok(())
}

/// Standard normal multiplier for a central interval of probability `level`.
/// Exactly 1.96 at the conventional 95%.
pub fn z_multiplier(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(SicError::InvalidArgument(format!("level must lie in (0, 1), got {level}")));
    }
    if level == 0.95 {
        return Ok(1.96);
    }
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(std.inverse_cdf(0.5 * (1.0 + level)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub mean: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Predictive mean, variance and interval for one design row (intercept first).
pub fn predict(theta_orig: &ParamVector, x_new: &[f64], level: f64) -> Result<PredictionInterval> {
    if x_new.len() != theta_orig.beta.len() {
        return Err(SicError::DimensionMismatch(format!(
            "row has {} entries, model expects {}",
            x_new.len(),
            theta_orig.beta.len()
        )));
    }
    let z = z_multiplier(level)?;
    let mean: f64 = x_new.iter().zip(&theta_orig.beta).map(|(a, b)| a * b).sum();
    let log_var: f64 = x_new.iter().zip(&theta_orig.alpha).map(|(a, b)| a * b).sum();
    let variance = log_var.exp();
    let half = z * variance.sqrt();
    Ok(PredictionInterval {
        mean,
        variance,
        lower: mean - half,
        upper: mean + half,
    })
}

/// Normal predictive density of one row evaluated on `points` response values.
pub fn conditional_density(theta_orig: &ParamVector, x_new: &[f64], points: &[f64]) -> Result<Vec<f64>> {
    let pi = predict(theta_orig, x_new, 0.95)?;
    let sd = pi.variance.sqrt();
    let dist = Normal::new(pi.mean, sd).map_err(|e| SicError::InvalidArgument(e.to_string()))?;
    use statrs::distribution::Continuous;
    Ok(points.iter().map(|&y| dist.pdf(y)).collect())
}

/// How observations are split into low / medium / high variability groups.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaCategories {
    /// Tertiles of the model-implied sigma over the evaluated rows.
    ModelTertiles,
    /// Fixed thresholds on the model-implied sigma: low `<= low`, high `> high`.
    ModelThresholds { low: f64, high: f64 },
    /// Fixed thresholds on externally supplied per-row sigma (e.g. the truth).
    Reference { sigma: Vec<f64>, low: f64, high: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub overall: f64,
    pub low: Option<f64>,
    pub medium: Option<f64>,
    pub high: Option<f64>,
    pub counts: [usize; 3],
}

/// Empirical quantile with linear interpolation between order statistics.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Tallies interval hits overall and per variability group.
pub fn coverage_from_hits(hits: &[bool], sigma: &[f64], categories: &SigmaCategories) -> Result<Coverage> {
    if hits.is_empty() {
        return Err(SicError::InvalidArgument("no evaluation rows".into()));
    }
    let (sig, low, high): (&[f64], f64, f64) = match categories {
        SigmaCategories::ModelTertiles => {
            let mut s = sigma.to_vec();
            s.sort_by(f64::total_cmp);
            (sigma, quantile(&s, 1.0 / 3.0), quantile(&s, 2.0 / 3.0))
        }
        SigmaCategories::ModelThresholds { low, high } => (sigma, *low, *high),
        SigmaCategories::Reference { sigma: r, low, high } => {
            if r.len() != hits.len() {
                return Err(SicError::DimensionMismatch("reference sigma length".into()));
            }
            (r.as_slice(), *low, *high)
        }
    };
    let mut inside = [0usize; 3];
    let mut counts = [0usize; 3];
    for (&h, &s) in hits.iter().zip(sig) {
        let cat = if s <= low {
            0
        } else if s <= high {
            1
        } else {
            2
        };
        counts[cat] += 1;
        inside[cat] += h as usize;
    }
    let frac = |c: usize| (counts[c] > 0).then(|| inside[c] as f64 / counts[c] as f64);
    Ok(Coverage {
        overall: hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64,
        low: frac(0),
        medium: frac(1),
        high: frac(2),
        counts,
    })
}

/// Fraction of `test` responses inside their prediction intervals, overall
/// and split by variability group. Rows are read on the raw predictor scale.
pub fn prediction_coverage(
    theta_orig: &ParamVector,
    test: &Dataset,
    level: f64,
    categories: &SigmaCategories,
) -> Result<Coverage> {
    if test.n() == 0 {
        return Err(SicError::InvalidArgument("empty test set".into()));
    }
    let mut hits = Vec::with_capacity(test.n());
    let mut sigma = Vec::with_capacity(test.n());
    for i in 0..test.n() {
        let pi = predict(theta_orig, &test.raw_row(i), level)?;
        hits.push(test.y[i] >= pi.lower && test.y[i] <= pi.upper);
        sigma.push(pi.variance.sqrt());
    }
    coverage_from_hits(&hits, &sigma, categories)
}

/// K-fold out-of-sample coverage. Every fold is re-ingested and fitted from
/// scratch; held-out hits and model sigmas are pooled before splitting.
#[allow(clippy::too_many_arguments)]
pub fn cross_validated_coverage(
    raw_x: &DMatrix<f64>,
    y: &[f64],
    standardize: bool,
    folds: usize,
    seed: u64,
    level: f64,
    categories: &SigmaCategories,
    mode: FitMode,
    schedule: &TelescopeSchedule,
    cfg: &SolverConfig,
) -> Result<Coverage> {
    let n = y.len();
    if folds < 2 || folds > n {
        return Err(SicError::InvalidArgument(format!("need 2 <= folds <= n, got {folds}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        fold_of[i] = rank % folds;
    }
    let mut hits = vec![false; n];
    let mut sigma = vec![0.0; n];
    for f in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        let tx = raw_x.select_rows(&train);
        let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let data = ingest(&tx, &ty, standardize)?;
        let fit = fit_model(&data, schedule, cfg, mode)?;
        for &i in &test {
            let mut row = vec![1.0];
            row.extend(raw_x.row(i).iter());
            let pi = predict(&fit.theta_orig, &row, level)?;
            hits[i] = y[i] >= pi.lower && y[i] <= pi.upper;
            sigma[i] = pi.variance.sqrt();
        }
    }
    coverage_from_hits(&hits, &sigma, categories)
}
