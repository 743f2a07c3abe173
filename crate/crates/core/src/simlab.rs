//! Monte-Carlo study engine: covariate/response generators, per-replicate
//! fitting and metric aggregation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Bernoulli, Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SicError};
use crate::inference::{fit_model, prediction_coverage, quantile, FitResult, SigmaCategories};
use crate::model::{ingest, standardize_params, Component, ParamVector};
use crate::solver::{FitMode, SolverConfig, TelescopeSchedule};

/// Marginal distribution of one simulated predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Covariate {
    Exponential(f64),
    Bernoulli(f64),
    StdNormal,
    /// Member of a jointly normal group with AR(1)-type correlation.
    MvnGroup(u32),
}

impl FromStr for Covariate {
    type Err = SicError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || SicError::InvalidScenario(format!("unrecognised covariate tag '{s}'"));
        let (head, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(s[i + 1..s.len() - 1].trim())),
            Some(_) => return Err(bad()),
            None => (s.as_str(), None),
        };
        let num = |a: Option<&str>| -> Result<f64> { a.and_then(|v| v.parse::<f64>().ok()).ok_or_else(bad) };
        let cov = match head.trim() {
            "exp" | "exponential" => Covariate::Exponential(num(arg)?),
            "bern" | "bernoulli" => Covariate::Bernoulli(num(arg)?),
            "normal" | "n" | "stdnormal" => {
                if arg.is_some() {
                    return Err(bad());
                }
                Covariate::StdNormal
            }
            "mvn" => Covariate::MvnGroup(arg.and_then(|v| v.parse().ok()).ok_or_else(bad)?),
            _ => return Err(bad()),
        };
        cov.validate()?;
        Ok(cov)
    }
}

impl TryFrom<String> for Covariate {
    type Error = SicError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Covariate> for String {
    fn from(c: Covariate) -> String {
        c.to_string()
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Covariate::Exponential(r) => write!(f, "exponential({r})"),
            Covariate::Bernoulli(p) => write!(f, "bernoulli({p})"),
            Covariate::StdNormal => write!(f, "normal"),
            Covariate::MvnGroup(g) => write!(f, "mvn({g})"),
        }
    }
}

impl Covariate {
    fn validate(&self) -> Result<()> {
        match *self {
            Covariate::Exponential(r) if !(r > 0.0 && r.is_finite()) => {
                Err(SicError::InvalidScenario(format!("exponential rate must be > 0, got {r}")))
            }
            Covariate::Bernoulli(p) if !(p > 0.0 && p < 1.0) => {
                Err(SicError::InvalidScenario(format!("bernoulli probability must lie in (0, 1), got {p}")))
            }
            _ => Ok(()),
        }
    }
}

/// How simulated covariates are transformed before the truth is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateScale {
    /// Draws are used as generated.
    Raw,
    /// Each column is centred and scaled by its population mean and SD.
    #[default]
    Standardized,
}

impl Covariate {
    /// Population mean and standard deviation of the marginal distribution.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            Covariate::Exponential(r) => (1.0 / r, 1.0 / r),
            Covariate::Bernoulli(p) => (p, (p * (1.0 - p)).sqrt()),
            Covariate::StdNormal | Covariate::MvnGroup(_) => (0.0, 1.0),
        }
    }
}

fn default_corr_base() -> f64 {
    0.8
}

fn default_test_fraction() -> f64 {
    0.2
}

/// Generative truth and study layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub covariates: Vec<Covariate>,
    #[serde(default = "default_corr_base")]
    pub mvn_corr_base: f64,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    pub seed: u64,
    #[serde(default)]
    pub covariate_scale: CovariateScale,
    /// Fixed low/high sigma cut points for coverage groups. When absent they
    /// are the tertiles of the true sigma distribution.
    #[serde(default)]
    pub sigma_thresholds: Option<(f64, f64)>,
}

const TABLE2_BETA: [f64; 13] = [0.0, 1.0, 0.5, 0.5, 1.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
const TABLE2_ALPHA: [f64; 13] = [0.0, 0.5, 1.0, 0.5, 1.0, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0];

fn table2_covariates() -> Vec<Covariate> {
    use Covariate::*;
    vec![
        Exponential(1.0),
        MvnGroup(1),
        Bernoulli(0.75),
        StdNormal,
        StdNormal,
        MvnGroup(1),
        StdNormal,
        StdNormal,
        MvnGroup(1),
        Bernoulli(0.75),
        Exponential(1.0),
        MvnGroup(1),
    ]
}

impl Scenario {
    /// Twelve mixed covariates, both components sparse.
    pub fn table2() -> Self {
        Scenario {
            name: "table2".into(),
            covariates: table2_covariates(),
            mvn_corr_base: 0.8,
            beta: TABLE2_BETA.to_vec(),
            alpha: TABLE2_ALPHA.to_vec(),
            sample_sizes: vec![100, 500, 1000],
            replicates: 300,
            test_fraction: 0.2,
            seed: 20_210_101,
            covariate_scale: CovariateScale::Standardized,
            sigma_thresholds: None,
        }
    }

    /// Same location truth as [`Scenario::table2`] with constant variance.
    pub fn homoscedastic() -> Self {
        Scenario {
            name: "homoscedastic".into(),
            alpha: vec![0.0; 13],
            ..Self::table2()
        }
    }

    /// Independent normal and Bernoulli(0.5) covariates.
    pub fn normal_setting() -> Self {
        use Covariate::*;
        let mut covariates = vec![StdNormal; 12];
        for j in [4, 5, 7, 9] {
            covariates[j - 1] = Bernoulli(0.5);
        }
        Scenario {
            name: "normal".into(),
            covariates,
            ..Self::table2()
        }
    }

    pub fn p(&self) -> usize {
        self.covariates.len()
    }

    pub fn truth(&self) -> ParamVector {
        ParamVector {
            beta: self.beta.clone(),
            alpha: self.alpha.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        let bad = |m: String| Err(SicError::InvalidScenario(m));
        if p == 0 {
            return bad("scenario needs at least one covariate".into());
        }
        if self.beta.len() != p + 1 || self.alpha.len() != p + 1 {
            return bad(format!(
                "beta and alpha need {} entries (intercept + {p} covariates), got {} and {}",
                p + 1,
                self.beta.len(),
                self.alpha.len()
            ));
        }
        if self.beta.iter().chain(&self.alpha).any(|v| !v.is_finite()) {
            return bad("true coefficients must be finite".into());
        }
        for c in &self.covariates {
            c.validate()?;
        }
        if !(self.mvn_corr_base > -1.0 && self.mvn_corr_base < 1.0) {
            return bad(format!("mvn_corr_base must lie in (-1, 1), got {}", self.mvn_corr_base));
        }
        if self.replicates == 0 {
            return bad("replicates must be >= 1".into());
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n < p + 2) {
            return bad(format!("every sample size must be at least {}", p + 2));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction <= 10.0) {
            return bad(format!("test_fraction must be positive, got {}", self.test_fraction));
        }
        if let Some((lo, hi)) = self.sigma_thresholds {
            if !(lo > 0.0 && hi >= lo) {
                return bad(format!("sigma thresholds must satisfy 0 < low <= high, got ({lo}, {hi})"));
            }
        }
        Ok(())
    }

    /// Lower Cholesky factors for each correlated group, keyed by the group's
    /// column positions.
    fn mvn_groups(&self) -> Vec<(Vec<usize>, DMatrix<f64>)> {
        let mut ids: Vec<u32> = self
            .covariates
            .iter()
            .filter_map(|c| match c {
                Covariate::MvnGroup(g) => Some(*g),
                _ => None,
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter()
            .map(|g| {
                let cols: Vec<usize> = (0..self.p())
                    .filter(|&j| self.covariates[j] == Covariate::MvnGroup(g))
                    .collect();
                let m = cols.len();
                let base = self.mvn_corr_base;
                let corr = DMatrix::from_fn(m, m, |a, b| base.powi((a as i32 - b as i32).abs()));
                let l = corr.cholesky().expect("AR(1) correlation is positive definite").l();
                (cols, l)
            })
            .collect()
    }
}

/// Raw `n x p` design drawn column by column from the scenario tags.
pub fn gen_covariates<R: Rng + ?Sized>(scenario: &Scenario, n: usize, rng: &mut R) -> DMatrix<f64> {
    let p = scenario.p();
    let groups = scenario.mvn_groups();
    let mut x = DMatrix::zeros(n, p);
    let mut z = Vec::new();
    for i in 0..n {
        for (j, cov) in scenario.covariates.iter().enumerate() {
            x[(i, j)] = match *cov {
                Covariate::Exponential(rate) => Exp::new(rate).expect("validated rate").sample(rng),
                Covariate::Bernoulli(prob) => {
                    if Bernoulli::new(prob).expect("validated probability").sample(rng) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Covariate::StdNormal => StandardNormal.sample(rng),
                Covariate::MvnGroup(_) => 0.0,
            };
        }
        for (cols, l) in &groups {
            z.clear();
            z.extend((0..cols.len()).map(|_| -> f64 { StandardNormal.sample(rng) }));
            for (a, &col) in cols.iter().enumerate() {
                x[(i, col)] = (0..=a).map(|b| l[(a, b)] * z[b]).sum();
            }
        }
    }
    x
}

/// Design the truth is applied to: [`gen_covariates`] followed by the
/// scenario's [`CovariateScale`].
pub fn gen_design<R: Rng + ?Sized>(scenario: &Scenario, n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut x = gen_covariates(scenario, n, rng);
    if scenario.covariate_scale == CovariateScale::Standardized {
        for (j, cov) in scenario.covariates.iter().enumerate() {
            let (m, sd) = cov.moments();
            x.column_mut(j).apply(|v| *v = (*v - m) / sd);
        }
    }
    x
}

fn dot_row(x: &DMatrix<f64>, i: usize, coef: &[f64]) -> f64 {
    coef[0] + (0..x.ncols()).map(|j| x[(i, j)] * coef[j + 1]).sum::<f64>()
}

/// `y_i = x_i'beta + sqrt(exp(x_i'alpha)) z_i` for a raw (intercept-free) design.
pub fn gen_response<R: Rng + ?Sized>(x: &DMatrix<f64>, truth: &ParamVector, rng: &mut R) -> Result<Vec<f64>> {
    if truth.beta.len() != x.ncols() + 1 || truth.alpha.len() != x.ncols() + 1 {
        return Err(SicError::DimensionMismatch(format!(
            "design has {} predictors, truth has {} / {} coefficients",
            x.ncols(),
            truth.beta.len(),
            truth.alpha.len()
        )));
    }
    Ok((0..x.nrows())
        .map(|i| {
            let z: f64 = StandardNormal.sample(rng);
            dot_row(x, i, &truth.beta) + (0.5 * dot_row(x, i, &truth.alpha)).exp() * z
        })
        .collect())
}

/// True standard deviation of each row.
pub fn true_sigma(x: &DMatrix<f64>, truth: &ParamVector) -> Vec<f64> {
    (0..x.nrows()).map(|i| (0.5 * dot_row(x, i, &truth.alpha)).exp()).collect()
}

/// Tertiles of the true sigma distribution, estimated from `draws` rows on a
/// stream independent of the study replicates.
pub fn reference_sigma_tertiles(scenario: &Scenario, draws: usize) -> (f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
    rng.set_stream(u64::MAX);
    let x = gen_design(scenario, draws, &mut rng);
    let mut s = true_sigma(&x, &scenario.truth());
    s.sort_by(f64::total_cmp);
    (quantile(&s, 1.0 / 3.0), quantile(&s, 2.0 / 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionCounts {
    pub c_beta: usize,
    pub ic_beta: usize,
    pub c_alpha: usize,
    pub ic_alpha: usize,
    pub exact_beta: bool,
    pub exact_alpha: bool,
}

impl SelectionCounts {
    pub fn exact_support(&self) -> bool {
        self.exact_beta && self.exact_alpha
    }
}

/// Correct / incorrect zero counts per component, intercepts excluded.
pub fn selection_metrics(theta_hat: &ParamVector, theta_true: &ParamVector, zero_tol: f64) -> SelectionCounts {
    let count = |hat: &[f64], truth: &[f64]| -> (usize, usize, bool) {
        let mut c = 0;
        let mut ic = 0;
        let mut exact = true;
        for (h, t) in hat.iter().zip(truth).skip(1) {
            let zeroed = h.abs() < zero_tol;
            if *t == 0.0 {
                c += zeroed as usize;
                exact &= zeroed;
            } else {
                ic += zeroed as usize;
                exact &= !zeroed;
            }
        }
        (c, ic, exact)
    };
    let (c_beta, ic_beta, exact_beta) = count(&theta_hat.beta, &theta_true.beta);
    let (c_alpha, ic_alpha, exact_alpha) = count(&theta_hat.alpha, &theta_true.alpha);
    SelectionCounts {
        c_beta,
        ic_beta,
        c_alpha,
        ic_alpha,
        exact_beta,
        exact_alpha,
    }
}

/// `(hat - truth)' X'X (hat - truth) / n` with `x` including the intercept column.
pub fn mse(hat: &[f64], truth: &[f64], x: &DMatrix<f64>) -> Result<f64> {
    if hat.len() != truth.len() || hat.len() != x.ncols() {
        return Err(SicError::DimensionMismatch(format!(
            "coefficient lengths {} / {} against {} design columns",
            hat.len(),
            truth.len(),
            x.ncols()
        )));
    }
    let n = x.nrows();
    let total: f64 = (0..n)
        .map(|i| {
            let r: f64 = (0..x.ncols()).map(|j| x[(i, j)] * (hat[j] - truth[j])).sum();
            r * r
        })
        .sum();
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentMetrics {
    pub c: f64,
    pub ic: f64,
    /// Rate of exact support recovery within this component.
    pub pt: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMetrics {
    pub component: Component,
    pub index: usize,
    pub truth: f64,
    pub est: f64,
    /// Empirical SD of the estimates.
    pub se: f64,
    /// Mean estimated SE over replicates where the coefficient was active.
    pub see: Option<f64>,
    pub cp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMetrics {
    pub overall: f64,
    pub low: Option<f64>,
    pub medium: Option<f64>,
    pub high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub n: usize,
    pub method: FitMode,
    pub replicates: usize,
    pub failures: usize,
    pub location: ComponentMetrics,
    pub dispersion: ComponentMetrics,
    /// Rate of exact support recovery in both components at once.
    pub pt_joint: f64,
    pub coefficients: Vec<CoefficientMetrics>,
    pub pcp: CoverageMetrics,
    pub mean_seconds: f64,
}

impl CellReport {
    pub fn component(&self, c: Component) -> &ComponentMetrics {
        match c {
            Component::Location => &self.location,
            Component::Dispersion => &self.dispersion,
        }
    }

    pub fn coefficient(&self, c: Component, j: usize) -> &CoefficientMetrics {
        self.coefficients
            .iter()
            .find(|m| m.component == c && m.index == j)
            .expect("coefficient in range")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub scenario: String,
    pub sigma_thresholds: (f64, f64),
    pub cells: Vec<CellReport>,
}

impl StudyReport {
    pub fn cell(&self, n: usize, method: FitMode) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.n == n && c.method == method)
    }

    /// Copy with wall-clock fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> StudyReport {
        let mut r = self.clone();
        for c in &mut r.cells {
            c.mean_seconds = 0.0;
        }
        r
    }
}

/// Everything kept from one successful fit of one replicate.
#[derive(Debug, Clone)]
struct ReplicateOutcome {
    counts: SelectionCounts,
    mse_beta: f64,
    mse_alpha: f64,
    estimate: ParamVector,
    se: ParamVector,
    active: ParamVector,
    pcp: CoverageMetrics,
    seconds: f64,
}

/// Deterministic stream for replicate `rep` at sample-size index `n_index`.
pub fn replicate_rng(seed: u64, n_index: usize, rep: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((n_index as u64) << 40) | rep as u64);
    rng
}

#[allow(clippy::too_many_arguments)]
fn run_replicate(
    scenario: &Scenario,
    n: usize,
    n_index: usize,
    rep: usize,
    methods: &[FitMode],
    schedule: &TelescopeSchedule,
    cfg: &SolverConfig,
    thresholds: (f64, f64),
) -> Vec<Option<ReplicateOutcome>> {
    let truth = scenario.truth();
    let mut rng = replicate_rng(scenario.seed, n_index, rep);
    let n_test = ((n as f64) * scenario.test_fraction).round().max(1.0) as usize;
    let x_train = gen_design(scenario, n, &mut rng);
    let y_train = match gen_response(&x_train, &truth, &mut rng) {
        Ok(y) => y,
        Err(_) => return vec![None; methods.len()],
    };
    let x_test = gen_design(scenario, n_test, &mut rng);
    let y_test = gen_response(&x_test, &truth, &mut rng).expect("dimensions checked");
    let sigma_test = true_sigma(&x_test, &truth);

    let Ok(train) = ingest(&x_train, &y_train, true) else {
        return vec![None; methods.len()];
    };
    let test = ingest(&x_test, &y_test, false).ok();
    let truth_std = standardize_params(&truth, &train.scaling);
    let categories = SigmaCategories::Reference {
        sigma: sigma_test,
        low: thresholds.0,
        high: thresholds.1,
    };

    methods
        .iter()
        .map(|&mode| {
            let start = Instant::now();
            let fit: FitResult = fit_model(&train, schedule, cfg, mode).ok()?;
            let seconds = start.elapsed().as_secs_f64();
            let counts = selection_metrics(&fit.theta_orig, &truth, cfg.zero_tol);
            let mse_beta = mse(&fit.theta_std.beta, &truth_std.beta, &train.x).ok()?;
            let mse_alpha = mse(&fit.theta_std.alpha, &truth_std.alpha, &train.x).ok()?;
            let mut se = ParamVector::zeros(scenario.p());
            let mut active = ParamVector::zeros(scenario.p());
            for c in Component::BOTH {
                for &j in fit.active(c) {
                    se.component_mut(c)[j] = fit.se(c, j).unwrap_or(f64::NAN);
                    active.component_mut(c)[j] = 1.0;
                }
            }
            // Rows with constant predictors cannot be re-ingested; fall back
            // to a raw-scale dataset in that case.
            let pcp = match &test {
                Some(t) => prediction_coverage(&fit.theta_orig, t, 0.95, &categories).ok()?,
                None => {
                    let t = raw_dataset(&x_test, &y_test);
                    prediction_coverage(&fit.theta_orig, &t, 0.95, &categories).ok()?
                }
            };
            Some(ReplicateOutcome {
                counts,
                mse_beta,
                mse_alpha,
                estimate: fit.theta_orig.clone(),
                se,
                active,
                pcp: CoverageMetrics {
                    overall: pcp.overall,
                    low: pcp.low,
                    medium: pcp.medium,
                    high: pcp.high,
                },
                seconds,
            })
        })
        .collect()
}

fn raw_dataset(x: &DMatrix<f64>, y: &[f64]) -> crate::model::Dataset {
    let n = x.nrows();
    let p = x.ncols();
    crate::model::Dataset {
        y: y.to_vec(),
        x: DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] }),
        scaling: crate::model::ScalingInfo::identity(p),
    }
}

fn mean(v: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, k) = v.into_iter().fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    (k > 0).then(|| s / k as f64)
}

fn aggregate(scenario: &Scenario, n: usize, method: FitMode, outcomes: &[Option<ReplicateOutcome>]) -> CellReport {
    let ok: Vec<&ReplicateOutcome> = outcomes.iter().flatten().collect();
    let failures = outcomes.len() - ok.len();
    let k = ok.len().max(1) as f64;
    let rate = |f: &dyn Fn(&ReplicateOutcome) -> f64| ok.iter().map(|o| f(o)).sum::<f64>() / k;
    let location = ComponentMetrics {
        c: rate(&|o| o.counts.c_beta as f64),
        ic: rate(&|o| o.counts.ic_beta as f64),
        pt: rate(&|o| o.counts.exact_beta as u8 as f64),
        mse: rate(&|o| o.mse_beta),
    };
    let dispersion = ComponentMetrics {
        c: rate(&|o| o.counts.c_alpha as f64),
        ic: rate(&|o| o.counts.ic_alpha as f64),
        pt: rate(&|o| o.counts.exact_alpha as u8 as f64),
        mse: rate(&|o| o.mse_alpha),
    };
    let truth = scenario.truth();
    let mut coefficients = Vec::new();
    for c in Component::BOTH {
        for (j, &t) in truth.component(c).iter().enumerate() {
            let est: Vec<f64> = ok.iter().map(|o| o.estimate.component(c)[j]).collect();
            let m = mean(est.iter().copied()).unwrap_or(f64::NAN);
            let var = if est.len() > 1 {
                est.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (est.len() - 1) as f64
            } else {
                0.0
            };
            let see = mean(
                ok.iter()
                    .filter(|o| o.active.component(c)[j] == 1.0)
                    .map(|o| o.se.component(c)[j]),
            );
            let cp = rate(&|o| {
                if o.active.component(c)[j] == 1.0 {
                    let e = o.estimate.component(c)[j];
                    let s = o.se.component(c)[j];
                    ((t - e).abs() <= 1.96 * s) as u8 as f64
                } else {
                    (t == 0.0) as u8 as f64
                }
            });
            coefficients.push(CoefficientMetrics {
                component: c,
                index: j,
                truth: t,
                est: m,
                se: var.sqrt(),
                see,
                cp,
            });
        }
    }
    let pcp = CoverageMetrics {
        overall: rate(&|o| o.pcp.overall),
        low: mean(ok.iter().filter_map(|o| o.pcp.low)),
        medium: mean(ok.iter().filter_map(|o| o.pcp.medium)),
        high: mean(ok.iter().filter_map(|o| o.pcp.high)),
    };
    CellReport {
        n,
        method,
        replicates: outcomes.len(),
        failures,
        location,
        dispersion,
        pt_joint: rate(&|o| o.counts.exact_support() as u8 as f64),
        coefficients,
        pcp,
        mean_seconds: rate(&|o| o.seconds),
    }
}

/// Runs every replicate of every sample size for each method on a pool of
/// `jobs` threads. Results do not depend on `jobs`.
pub fn run_study(
    scenario: &Scenario,
    methods: &[FitMode],
    schedule: &TelescopeSchedule,
    cfg: &SolverConfig,
    jobs: usize,
) -> Result<StudyReport> {
    scenario.validate()?;
    cfg.validate()?;
    if methods.is_empty() {
        return Err(SicError::InvalidArgument("no methods requested".into()));
    }
    let thresholds = scenario
        .sigma_thresholds
        .unwrap_or_else(|| reference_sigma_tertiles(scenario, 200_000));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SicError::InvalidArgument(format!("thread pool: {e}")))?;

    let mut cells = Vec::new();
    for (n_index, &n) in scenario.sample_sizes.iter().enumerate() {
        let per_rep: Vec<Vec<Option<ReplicateOutcome>>> = pool.install(|| {
            (0..scenario.replicates)
                .into_par_iter()
                .map(|rep| run_replicate(scenario, n, n_index, rep, methods, schedule, cfg, thresholds))
                .collect()
        });
        for (m, &method) in methods.iter().enumerate() {
            let outcomes: Vec<Option<ReplicateOutcome>> = per_rep.iter().map(|r| r[m].clone()).collect();
            let cell = aggregate(scenario, n, method, &outcomes);
            if cell.failures * 20 > cell.replicates {
                return Err(SicError::TooManyFailures {
                    failed: cell.failures,
                    total: cell.replicates,
                });
            }
            cells.push(cell);
        }
    }
    Ok(StudyReport {
        scenario: scenario.name.clone(),
        sigma_thresholds: thresholds,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_moments(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
        let n = v.clone().count() as f64;
        let m = v.clone().sum::<f64>() / n;
        (m, v.map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn covariate_tags_parse() {
        assert_eq!("exponential(1)".parse::<Covariate>().unwrap(), Covariate::Exponential(1.0));
        assert_eq!("Bern(0.75)".parse::<Covariate>().unwrap(), Covariate::Bernoulli(0.75));
        assert_eq!("normal".parse::<Covariate>().unwrap(), Covariate::StdNormal);
        assert_eq!("mvn(2)".parse::<Covariate>().unwrap(), Covariate::MvnGroup(2));
        for bad in ["bernoulli(1.5)", "exp(0)", "gamma(2)", "mvn(x)", "normal(3)", "exp(1"] {
            assert!(bad.parse::<Covariate>().is_err(), "{bad}");
        }
        let c = Covariate::Bernoulli(0.75);
        assert_eq!(c.to_string().parse::<Covariate>().unwrap(), c);
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::table2().validate().is_ok());
        let mut s = Scenario::table2();
        s.beta.pop();
        assert!(matches!(s.validate(), Err(SicError::InvalidScenario(_))));
        let s = Scenario { replicates: 0, ..Scenario::table2() };
        assert!(s.validate().is_err());
        let s = Scenario { sample_sizes: vec![10], ..Scenario::table2() };
        assert!(s.validate().is_err());
    }

    #[test]
    fn generator_moments() {
        let s = Scenario::table2();
        let n = 100_000;
        let x = gen_covariates(&s, n, &mut replicate_rng(7, 0, 0));
        let xr = &x;
        let col = |j: usize| (0..n).map(move |i| xr[(i, j)]);
        for (j, cov) in s.covariates.iter().enumerate() {
            let (m, v) = sample_moments(col(j));
            let (em, ev) = match cov {
                Covariate::Exponential(r) => (1.0 / r, 1.0 / (r * r)),
                Covariate::Bernoulli(p) => (*p, p * (1.0 - p)),
                _ => (0.0, 1.0),
            };
            let se_mean = (ev / n as f64).sqrt();
            assert!((m - em).abs() < 4.0 * se_mean, "column {j}: mean {m}");
            assert!((v - ev).abs() < 0.03 * ev.max(0.2), "column {j}: var {v}");
        }
        // Columns 2 and 6 (1-based) are the first two group members.
        let (a, b) = (1, 5);
        let cov: f64 = (0..n).map(|i| x[(i, a)] * x[(i, b)]).sum::<f64>() / n as f64;
        assert!((cov - 0.8).abs() < 0.03, "corr {cov}");
        let far: f64 = (0..n).map(|i| x[(i, 1)] * x[(i, 11)]).sum::<f64>() / n as f64;
        assert!((far - 0.512).abs() < 0.03, "corr {far}");
    }

    #[test]
    fn standardized_design_has_unit_moments() {
        let s = Scenario::table2();
        let n = 100_000;
        let x = gen_design(&s, n, &mut replicate_rng(8, 0, 0));
        for j in 0..s.p() {
            let (m, v) = sample_moments((0..n).map(|i| x[(i, j)]));
            assert!(m.abs() < 0.02 && (v - 1.0).abs() < 0.03, "column {j}: {m} {v}");
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let s = Scenario::table2();
        let a = gen_covariates(&s, 50, &mut replicate_rng(3, 1, 4));
        let b = gen_covariates(&s, 50, &mut replicate_rng(3, 1, 4));
        assert_eq!(a, b);
        let c = gen_covariates(&s, 50, &mut replicate_rng(3, 1, 5));
        assert_ne!(a, c);
    }

    #[test]
    fn response_variance() {
        let n = 100_000;
        let s = Scenario::table2();
        let mut rng = replicate_rng(11, 0, 0);
        let x = gen_covariates(&s, n, &mut rng);

        let unit = ParamVector::new(s.beta.clone(), vec![0.0; 13]).unwrap();
        let y = gen_response(&x, &unit, &mut rng).unwrap();
        let (_, v) = sample_moments((0..n).map(|i| y[i] - dot_row(&x, i, &unit.beta)));
        assert!((v - 1.0).abs() < 0.02);

        let mut four = vec![0.0; 13];
        four[0] = 4f64.ln();
        let wide = ParamVector::new(vec![0.0; 13], four).unwrap();
        let y = gen_response(&x, &wide, &mut rng).unwrap();
        let (_, v) = sample_moments(y.iter().copied());
        assert!((v.sqrt() - 2.0).abs() < 0.02);

        let het = ParamVector::new(vec![0.0; 13], s.alpha.clone()).unwrap();
        let y = gen_response(&x, &het, &mut rng).unwrap();
        let (m, v) = sample_moments(y.iter().copied());
        let expected: f64 = true_sigma(&x, &het).iter().map(|s| s * s).sum::<f64>() / n as f64;
        assert!(m.abs() < 0.1);
        assert!((v / expected - 1.0).abs() < 0.03 * 3.0, "{v} vs {expected}");

        assert!(gen_response(&x, &ParamVector::zeros(3), &mut rng).is_err());
    }

    #[test]
    fn sigma_tertiles_of_table2_truth() {
        let (lo, hi) = reference_sigma_tertiles(&Scenario::table2(), 200_000);
        assert!((lo - 0.66).abs() < 0.02, "{lo}");
        assert!((hi - 1.52).abs() < 0.03, "{hi}");
        let raw = Scenario {
            covariate_scale: CovariateScale::Raw,
            ..Scenario::table2()
        };
        let (lo, hi) = reference_sigma_tertiles(&raw, 200_000);
        assert!((lo - 1.03).abs() < 0.03, "{lo}");
        assert!((hi - 2.32).abs() < 0.05, "{hi}");
    }

    #[test]
    fn selection_metric_examples() {
        let truth = Scenario::table2().truth();
        let m = selection_metrics(&truth, &truth, 1e-8);
        assert_eq!((m.c_beta, m.ic_beta, m.c_alpha, m.ic_alpha), (6, 0, 6, 0));
        assert!(m.exact_support());

        let zero = ParamVector::zeros(12);
        let m = selection_metrics(&zero, &truth, 1e-8);
        assert_eq!((m.c_beta, m.ic_beta), (6, 6));
        assert!(!m.exact_beta);

        let mut one_off = truth.clone();
        one_off.beta[9] = 0.1;
        let m = selection_metrics(&one_off, &truth, 1e-8);
        assert_eq!(m.c_beta, 5);
        assert!(!m.exact_support() && m.exact_alpha);
    }

    #[test]
    fn mse_examples() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(mse(&[1.0, 0.0], &[0.0, 0.0], &x).unwrap(), 1.0);
        assert_eq!(mse(&[2.0, 0.0], &[0.0, 0.0], &x).unwrap(), 4.0);
        assert_eq!(mse(&[0.3, 0.1], &[0.3, 0.1], &x).unwrap(), 0.0);
        assert!(mse(&[1.0], &[0.0, 0.0], &x).is_err());
    }

    #[test]
    fn mse_is_scale_invariant() {
        let s = Scenario::table2();
        let mut rng = replicate_rng(5, 0, 0);
        let x = gen_covariates(&s, 200, &mut rng);
        let y = gen_response(&x, &s.truth(), &mut rng).unwrap();
        let data = ingest(&x, &y, true).unwrap();
        let raw = raw_dataset(&x, &y);
        let hat: Vec<f64> = s.beta.iter().map(|b| b + 0.05).collect();
        let hat_std = standardize_params(&ParamVector::new(hat.clone(), s.alpha.clone()).unwrap(), &data.scaling);
        let truth_std = standardize_params(&s.truth(), &data.scaling);
        let a = mse(&hat, &s.beta, &raw.x).unwrap();
        let b = mse(&hat_std.beta, &truth_std.beta, &data.x).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }
}
