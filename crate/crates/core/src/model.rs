//! Data model and the unpenalized normal location-dispersion likelihood.
//!
//! The response is modelled as `y_i ~ N(x_i'beta, exp(x_i'alpha))`, so both the
//! mean and the log-variance carry their own linear predictor over the same
//! design row. Everything here is a pure function of its inputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SicError};

/// Largest `|x'alpha|` accepted before `exp(-x'alpha)` is considered unsafe.
pub const MAX_LOG_VARIANCE: f64 = 700.0;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Per-predictor scale factors applied at ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingInfo {
    /// Sample standard deviation of each raw predictor (1.0 when not scaled).
    pub sd: Vec<f64>,
    pub scaled: bool,
}

impl ScalingInfo {
    pub fn identity(p: usize) -> Self {
        Self {
            sd: vec![1.0; p],
            scaled: false,
        }
    }
}

/// Response plus design matrix with a leading intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    /// `n x (p+1)`, column 0 is all ones. Predictor columns are scaled when
    /// `scaling.scaled` is set.
    pub x: DMatrix<f64>,
    pub scaling: ScalingInfo,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of non-intercept predictors.
    pub fn p(&self) -> usize {
        self.x.ncols() - 1
    }

    /// Design row `i` on the original (unscaled) predictor scale.
    pub fn raw_row(&self, i: usize) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.x.ncols());
        row.push(1.0);
        for j in 1..self.x.ncols() {
            row.push(self.x[(i, j)] * self.scaling.sd[j - 1]);
        }
        row
    }

    /// Copy of the rows in `rows`, keeping the scaling metadata.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let x = DMatrix::from_fn(rows.len(), self.x.ncols(), |i, j| self.x[(rows[i], j)]);
        Dataset {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            x,
            scaling: self.scaling.clone(),
        }
    }
}

/// Location coefficients `beta` and log-dispersion coefficients `alpha`,
/// each of length `p+1` with the intercept first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl ParamVector {
    pub fn new(beta: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if beta.len() != alpha.len() || beta.is_empty() {
            return Err(SicError::DimensionMismatch(format!(
                "beta has {} entries, alpha has {}",
                beta.len(),
                alpha.len()
            )));
        }
        if beta.iter().chain(alpha.iter()).any(|v| !v.is_finite()) {
            return Err(SicError::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self { beta, alpha })
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            beta: vec![0.0; p + 1],
            alpha: vec![0.0; p + 1],
        }
    }

    /// Number of non-intercept predictors.
    pub fn p(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn component(&self, c: Component) -> &[f64] {
        match c {
            Component::Location => &self.beta,
            Component::Dispersion => &self.alpha,
        }
    }

    pub fn component_mut(&mut self, c: Component) -> &mut Vec<f64> {
        match c {
            Component::Location => &mut self.beta,
            Component::Dispersion => &mut self.alpha,
        }
    }

    /// `[beta..., alpha...]`
    pub fn stacked(&self) -> Vec<f64> {
        self.beta.iter().chain(self.alpha.iter()).copied().collect()
    }

    pub fn from_stacked(v: &[f64]) -> Self {
        let k = v.len() / 2;
        Self {
            beta: v[..k].to_vec(),
            alpha: v[k..].to_vec(),
        }
    }

    pub(crate) fn check_dims(&self, data: &Dataset) -> Result<()> {
        let k = data.x.ncols();
        if self.beta.len() != k || self.alpha.len() != k {
            return Err(SicError::DimensionMismatch(format!(
                "parameter length {} / {} vs design with {} columns",
                self.beta.len(),
                self.alpha.len(),
                k
            )));
        }
        Ok(())
    }
}

/// Which distributional parameter a coefficient belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Location,
    Dispersion,
}

impl Component {
    pub const BOTH: [Component; 2] = [Component::Location, Component::Dispersion];

    pub fn name(self) -> &'static str {
        match self {
            Component::Location => "location",
            Component::Dispersion => "dispersion",
        }
    }
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Component {
    type Err = SicError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "location" | "beta" | "mean" => Ok(Component::Location),
            "dispersion" | "alpha" | "variance" => Ok(Component::Dispersion),
            other => Err(SicError::InvalidArgument(format!("unknown component '{other}'"))),
        }
    }
}

/// Working vectors and weight diagonals shared by the score and information.
#[derive(Debug, Clone)]
pub struct ModelDerivatives {
    pub z_beta: Vec<f64>,
    pub z_alpha: Vec<f64>,
    pub w_beta: Vec<f64>,
    pub w_alpha: Vec<f64>,
    pub w_cross: Vec<f64>,
}

/// `X v` for a coefficient vector of length `p+1`.
pub(crate) fn linear_predictor(x: &DMatrix<f64>, coef: &[f64]) -> Vec<f64> {
    let mut eta = vec![0.0; x.nrows()];
    for (j, &c) in coef.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (e, &xij) in eta.iter_mut().zip(x.column(j).iter()) {
            *e += c * xij;
        }
    }
    eta
}

fn check_overflow(eta_alpha: &[f64]) -> Result<()> {
    let worst = eta_alpha.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if worst > MAX_LOG_VARIANCE || !worst.is_finite() {
        return Err(SicError::NumericalOverflow(worst));
    }
    Ok(())
}

impl ModelDerivatives {
    pub fn compute(theta: &ParamVector, data: &Dataset) -> Result<Self> {
        theta.check_dims(data)?;
        let eta_b = linear_predictor(&data.x, &theta.beta);
        let eta_a = linear_predictor(&data.x, &theta.alpha);
        check_overflow(&eta_a)?;
        let n = data.n();
        let mut out = Self {
            z_beta: Vec::with_capacity(n),
            z_alpha: Vec::with_capacity(n),
            w_beta: Vec::with_capacity(n),
            w_alpha: Vec::with_capacity(n),
            w_cross: Vec::with_capacity(n),
        };
        for i in 0..n {
            let w = (-eta_a[i]).exp();
            let r = data.y[i] - eta_b[i];
            let wr = w * r;
            let wr2 = wr * r;
            out.z_beta.push(wr);
            out.z_alpha.push(0.5 * (wr2 - 1.0));
            out.w_beta.push(w);
            out.w_alpha.push(0.5 * wr2);
            out.w_cross.push(wr);
        }
        Ok(out)
    }
}

/// Builds a [`Dataset`] from raw predictors (`rows x p`) and a response.
///
/// An intercept column is prepended. With `standardize`, each predictor is
/// divided by its sample standard deviation (denominator `n - 1`); no
/// centering is applied and the response is left untouched.
pub fn ingest(raw_x: &DMatrix<f64>, y: &[f64], standardize: bool) -> Result<Dataset> {
    let n = raw_x.nrows();
    let p = raw_x.ncols();
    if y.len() != n {
        return Err(SicError::DimensionMismatch(format!(
            "{n} design rows but {} responses",
            y.len()
        )));
    }
    for (i, v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(SicError::NonFinite { row: i, col: 0 });
        }
    }
    for j in 0..p {
        for i in 0..n {
            if !raw_x[(i, j)].is_finite() {
                return Err(SicError::NonFinite { row: i, col: j + 1 });
            }
        }
    }
    if n < p + 2 {
        return Err(SicError::TooFewRows { needed: p + 2, got: n });
    }

    let mut sd = vec![1.0; p];
    for (j, s) in sd.iter_mut().enumerate() {
        let col = raw_x.column(j);
        let mean = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let col_sd = (ss / (n as f64 - 1.0)).sqrt();
        if col_sd.is_nan() || col_sd <= 0.0 {
            return Err(SicError::ConstantColumn(j + 1));
        }
        if standardize {
            *s = col_sd;
        }
    }

    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { raw_x[(i, j - 1)] / sd[j - 1] });
    Ok(Dataset {
        y: y.to_vec(),
        x,
        scaling: ScalingInfo {
            sd,
            scaled: standardize,
        },
    })
}

/// Normal log-likelihood with mean `x'beta` and variance `exp(x'alpha)`.
pub fn log_likelihood(theta: &ParamVector, data: &Dataset) -> Result<f64> {
    theta.check_dims(data)?;
    let eta_b = linear_predictor(&data.x, &theta.beta);
    let eta_a = linear_predictor(&data.x, &theta.alpha);
    check_overflow(&eta_a)?;
    let mut sum_eta = 0.0;
    let mut sum_wr2 = 0.0;
    for i in 0..data.n() {
        let r = data.y[i] - eta_b[i];
        sum_eta += eta_a[i];
        sum_wr2 += (-eta_a[i]).exp() * r * r;
    }
    Ok(-0.5 * data.n() as f64 * LN_2PI - 0.5 * sum_eta - 0.5 * sum_wr2)
}

/// Gradient of [`log_likelihood`]: `(X'z_beta, X'z_alpha)`.
pub fn score(theta: &ParamVector, data: &Dataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = ModelDerivatives::compute(theta, data)?;
    Ok((xt_times(&data.x, &d.z_beta), xt_times(&data.x, &d.z_alpha)))
}

/// Full observed information `-d2l/dtheta dtheta'`, ordered `(beta, alpha)`,
/// including the location-dispersion cross block.
pub fn observed_information(theta: &ParamVector, data: &Dataset) -> Result<DMatrix<f64>> {
    let d = ModelDerivatives::compute(theta, data)?;
    let k = data.x.ncols();
    let bb = weighted_gram(&data.x, &d.w_beta);
    let aa = weighted_gram(&data.x, &d.w_alpha);
    let ba = weighted_gram(&data.x, &d.w_cross);
    let mut info = DMatrix::zeros(2 * k, 2 * k);
    info.view_mut((0, 0), (k, k)).copy_from(&bb);
    info.view_mut((k, k), (k, k)).copy_from(&aa);
    info.view_mut((0, k), (k, k)).copy_from(&ba);
    info.view_mut((k, 0), (k, k)).copy_from(&ba.transpose());
    Ok(info)
}

/// Maps coefficients fitted on scaled predictors back to the raw scale.
/// Intercepts are unchanged since scaling does not center.
pub fn unstandardize(theta_std: &ParamVector, scaling: &ScalingInfo) -> ParamVector {
    if !scaling.scaled {
        return theta_std.clone();
    }
    let rescale = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(j, &c)| if j == 0 { c } else { c / scaling.sd[j - 1] })
            .collect()
    };
    ParamVector {
        beta: rescale(&theta_std.beta),
        alpha: rescale(&theta_std.alpha),
    }
}

/// Inverse of [`unstandardize`].
pub fn standardize_params(theta_orig: &ParamVector, scaling: &ScalingInfo) -> ParamVector {
    if !scaling.scaled {
        return theta_orig.clone();
    }
    let rescale = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(j, &c)| if j == 0 { c } else { c * scaling.sd[j - 1] })
            .collect()
    };
    ParamVector {
        beta: rescale(&theta_orig.beta),
        alpha: rescale(&theta_orig.alpha),
    }
}

/// `X'v`
pub(crate) fn xt_times(x: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..x.ncols())
        .map(|j| x.column(j).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `X' diag(w) X`
pub(crate) fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let idx: Vec<usize> = (0..x.ncols()).collect();
    weighted_gram_subset(x, w, &idx)
}

/// `X_S' diag(w) X_S` for the column subset `cols`.
pub(crate) fn weighted_gram_subset(x: &DMatrix<f64>, w: &[f64], cols: &[usize]) -> DMatrix<f64> {
    let k = cols.len();
    let mut g = DMatrix::zeros(k, k);
    let mut wx = vec![0.0; x.nrows()];
    for a in 0..k {
        let ca = x.column(cols[a]);
        for (o, (&xi, &wi)) in wx.iter_mut().zip(ca.iter().zip(w)) {
            *o = xi * wi;
        }
        for b in a..k {
            let s: f64 = wx.iter().zip(x.column(cols[b]).iter()).map(|(p, q)| p * q).sum();
            g[(a, b)] = s;
            g[(b, a)] = s;
        }
    }
    g
}

pub(crate) fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
