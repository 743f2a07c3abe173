//! JSON persistence of fitted models.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sicreg::{Component, FitMode, FitResult, ParamVector, ScalingInfo, SolverConfig, TelescopeSchedule};

use crate::CliError;

pub const SCHEMA_VERSION: &str = "sicreg-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRow {
    pub term: String,
    pub component: Component,
    pub estimate: f64,
    pub active: bool,
    pub se: Option<f64>,
    pub delta_bic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleRecord {
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub steps: usize,
    pub decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: String,
    pub method: FitMode,
    pub response: String,
    /// Predictor names in design order (intercept excluded).
    pub predictors: Vec<String>,
    pub n: usize,
    /// Original-scale coefficients, intercept first; inactive entries are 0.
    pub location: Vec<f64>,
    pub dispersion: Vec<f64>,
    pub coefficients: Vec<CoefficientRow>,
    pub bic: f64,
    pub scaling: ScalingInfo,
    pub schedule: ScheduleRecord,
    pub config: SolverConfig,
    pub converged: bool,
    /// SHA-256 of the training CSV bytes.
    pub training_sha256: String,
}

pub fn term_name(predictors: &[String], j: usize) -> &str {
    if j == 0 {
        "(Intercept)"
    } else {
        &predictors[j - 1]
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ModelFile {
    #[allow(clippy::too_many_arguments)]
    pub fn from_fit(
        fit: &FitResult,
        response: &str,
        predictors: &[String],
        n: usize,
        scaling: &ScalingInfo,
        schedule: &TelescopeSchedule,
        config: &SolverConfig,
        training_sha256: String,
    ) -> ModelFile {
        let mut coefficients = Vec::new();
        for c in Component::BOTH {
            for (j, &est) in fit.theta_orig.component(c).iter().enumerate() {
                coefficients.push(CoefficientRow {
                    term: term_name(predictors, j).to_owned(),
                    component: c,
                    estimate: est,
                    active: fit.active(c).contains(&j),
                    se: fit.se(c, j),
                    delta_bic: fit.delta(c, j),
                });
            }
        }
        ModelFile {
            schema_version: SCHEMA_VERSION.into(),
            method: fit.mode,
            response: response.into(),
            predictors: predictors.to_vec(),
            n,
            location: fit.theta_orig.beta.clone(),
            dispersion: fit.theta_orig.alpha.clone(),
            coefficients,
            bic: fit.bic,
            scaling: scaling.clone(),
            schedule: ScheduleRecord {
                epsilon_start: schedule.eps_start.value(),
                epsilon_end: schedule.eps_end.value(),
                steps: schedule.steps,
                decay: schedule.decay,
            },
            config: config.clone(),
            converged: fit.trace.converged,
            training_sha256,
        }
    }

    pub fn theta(&self) -> ParamVector {
        ParamVector {
            beta: self.location.clone(),
            alpha: self.dispersion.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model file serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<ModelFile, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("model file is not valid JSON: {e}")))?;
        match value.get("schema_version").and_then(|v| v.as_str()) {
            Some(SCHEMA_VERSION) => {}
            Some(other) => {
                return Err(CliError::Input(format!(
                    "unsupported model schema_version '{other}' (expected '{SCHEMA_VERSION}')"
                )))
            }
            None => return Err(CliError::Input("model file has no schema_version".into())),
        }
        let m: ModelFile =
            serde_json::from_value(value).map_err(|e| CliError::Input(format!("malformed model file: {e}")))?;
        let k = m.predictors.len() + 1;
        if m.location.len() != k || m.dispersion.len() != k || m.scaling.sd.len() != k - 1 {
            return Err(CliError::Input("model file coefficient lengths do not match its predictors".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<ModelFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read model {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
