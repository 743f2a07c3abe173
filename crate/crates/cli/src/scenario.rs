//! TOML scenario files for `simulate`.

use std::path::Path;

use serde::Deserialize;
use sicreg::simlab::{Covariate, CovariateScale, Scenario};
use sicreg::solver::make_schedule;
use sicreg::{Epsilon, FitMode, TelescopeSchedule};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub epsilon_start: Option<f64>,
    pub epsilon_end: Option<f64>,
    pub steps: Option<usize>,
    /// Skip telescoping and fit once at this epsilon.
    pub fixed_epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    covariates: Vec<Covariate>,
    mvn_corr_base: Option<f64>,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    sample_sizes: Vec<usize>,
    replicates: usize,
    test_fraction: Option<f64>,
    seed: u64,
    covariate_scale: Option<CovariateScale>,
    sigma_thresholds: Option<(f64, f64)>,
    methods: Option<Vec<String>>,
    schedule: Option<ScheduleSection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub methods: Vec<FitMode>,
    pub schedule: Option<ScheduleSection>,
}

impl ScheduleSection {
    /// Resolves the schedule, letting explicit command-line values win.
    pub fn resolve(
        section: Option<&ScheduleSection>,
        cli_start: Option<f64>,
        cli_end: Option<f64>,
        cli_steps: Option<usize>,
    ) -> Result<TelescopeSchedule, CliError> {
        let fixed = section.and_then(|s| s.fixed_epsilon);
        if let (Some(eps), None, None, None) = (fixed, cli_start, cli_end, cli_steps) {
            return Ok(TelescopeSchedule::fixed(Epsilon::new(eps)?));
        }
        let start = cli_start.or(section.and_then(|s| s.epsilon_start)).unwrap_or(10.0);
        let end = cli_end.or(section.and_then(|s| s.epsilon_end)).unwrap_or(1e-5);
        let steps = cli_steps.or(section.and_then(|s| s.steps)).unwrap_or(100);
        Ok(make_schedule(start, end, steps)?)
    }
}

pub fn parse_scenario(text: &str, label: &str) -> Result<ScenarioFile, CliError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Input(format!("{label}: {e}")))?;
    let methods = match raw.methods {
        None => vec![FitMode::Mpr, FitMode::Spr],
        Some(list) => {
            let mut out = Vec::new();
            for m in list {
                let mode: FitMode = m.parse()?;
                if !out.contains(&mode) {
                    out.push(mode);
                }
            }
            out
        }
    };
    let scenario = Scenario {
        name: raw.name,
        covariates: raw.covariates,
        mvn_corr_base: raw.mvn_corr_base.unwrap_or(0.8),
        beta: raw.beta,
        alpha: raw.alpha,
        sample_sizes: raw.sample_sizes,
        replicates: raw.replicates,
        test_fraction: raw.test_fraction.unwrap_or(0.2),
        seed: raw.seed,
        covariate_scale: raw.covariate_scale.unwrap_or_default(),
        sigma_thresholds: raw.sigma_thresholds,
    };
    scenario.validate()?;
    Ok(ScenarioFile {
        scenario,
        methods,
        schedule: raw.schedule,
    })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read scenario {}: {e}", path.display())))?;
    parse_scenario(&text, &path.display().to_string())
}
