//! Command-line front end for `sicreg`: fitting, coefficient paths,
//! prediction, BIC deltas and simulation studies.

pub mod csvio;
pub mod modelfile;
pub mod report;
pub mod scenario;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sicreg::inference::{
    conditional_density, cross_validated_coverage, fill_delta_bic, predict, summarize, Coverage, DeltaBic,
};
use sicreg::model::ingest;
use sicreg::simlab::run_study;
use sicreg::solver::fit_free;
use sicreg::{Component, Dataset, FitMode, FitResult, SicError, SigmaCategories, SolverConfig, TelescopeSchedule};

use crate::csvio::{fmt6, read_table, write_csv, Table};
use crate::modelfile::{sha256_hex, term_name, ModelFile};
use crate::scenario::{load_scenario, parse_scenario, ScenarioFile, ScheduleSection};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<SicError> for CliError {
    fn from(e: SicError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sicreg", version, about = "Smooth-information-criterion selection for location-dispersion regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// Training CSV (comma separated, header row, no missing values).
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    pub response: String,
    /// Comma-separated predictor columns; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,
    /// Fit on raw predictor scales.
    #[arg(long)]
    pub no_standardize: bool,
    /// Location-only selection with constant variance.
    #[arg(long)]
    pub spr: bool,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SolverArgs {
    #[arg(long)]
    pub epsilon_start: Option<f64>,
    #[arg(long)]
    pub epsilon_end: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Inner Newton tolerance on the max-norm of the update.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Magnitude below which a coefficient counts as zero.
    #[arg(long, default_value_t = 1e-8)]
    pub zero_tol: f64,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, CliError> {
        let cfg = SolverConfig {
            tol: self.tol,
            zero_tol: self.zero_tol,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn schedule(&self, section: Option<&ScheduleSection>) -> Result<TelescopeSchedule, CliError> {
        ScheduleSection::resolve(section, self.epsilon_start, self.epsilon_end, self.steps)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model, print the coefficient table and optionally save it.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the fitted model as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the refits needed for BIC deltas.
        #[arg(long)]
        no_delta_bic: bool,
        /// Also report K-fold cross-validated prediction coverage.
        #[arg(long)]
        cv_folds: Option<usize>,
        /// Seed for the cross-validation fold split.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Standardized coefficients at every telescope step, as CSV.
    Path {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prediction intervals for new rows from a saved model.
    Predict {
        /// Model JSON written by `fit --out`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Observed response column; enables coverage reporting.
        #[arg(long)]
        actual: Option<String>,
        /// Fixed low,high sigma cut points instead of tertiles.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        sigma_thresholds: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write conditional density curves (row, y, density) here.
        #[arg(long)]
        density_out: Option<PathBuf>,
        #[arg(long, default_value_t = 201)]
        density_points: usize,
    },
    /// Run a Monte-Carlo study described by a scenario file.
    Simulate {
        /// Scenario TOML file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated sample sizes overriding the scenario's.
        #[arg(long = "n", value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        jobs: Option<usize>,
        /// Restrict to the location-only method.
        #[arg(long)]
        spr: bool,
        #[command(flatten)]
        solver: SolverArgs,
        /// Machine-readable CSV report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// BIC change from refitting with each active coefficient fixed at zero.
    DeltaBic {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Only this component (location or dispersion).
        #[arg(long)]
        component: Option<Component>,
        /// Only this predictor.
        #[arg(long)]
        term: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub const BUNDLED_SCENARIOS: [(&str, &str); 9] = [
    ("table2", include_str!("../scenarios/table2.toml")),
    ("homoscedastic", include_str!("../scenarios/homoscedastic.toml")),
    ("normal", include_str!("../scenarios/normal.toml")),
    ("fixed_epsilon", include_str!("../scenarios/fixed_epsilon.toml")),
    ("fewer_steps", include_str!("../scenarios/fewer_steps.toml")),
    ("effects_location", include_str!("../scenarios/effects_location.toml")),
    ("effects_dispersion", include_str!("../scenarios/effects_dispersion.toml")),
    ("active_location", include_str!("../scenarios/active_location.toml")),
    ("active_dispersion", include_str!("../scenarios/active_dispersion.toml")),
];

pub fn resolve_scenario(spec: &str) -> Result<ScenarioFile, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        return load_scenario(path);
    }
    match BUNDLED_SCENARIOS.iter().find(|(name, _)| *name == spec) {
        Some((name, text)) => parse_scenario(text, name),
        None => Err(CliError::Input(format!(
            "scenario '{spec}' is neither a file nor a bundled scenario ({})",
            BUNDLED_SCENARIOS.map(|(n, _)| n).join(", ")
        ))),
    }
}

/// Training data read from CSV together with the column names used.
pub struct LoadedData {
    pub dataset: Dataset,
    pub predictors: Vec<String>,
    pub fingerprint: String,
    pub raw: Table,
    pub predictor_cols: Vec<usize>,
    pub response_col: usize,
}

pub fn load_training(args: &DataArgs) -> Result<LoadedData, CliError> {
    let bytes = std::fs::read(&args.data)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.data.display())))?;
    let table = csvio::parse_table(&bytes, &args.data.display().to_string())?;
    let response_col = table
        .column_index(&args.response)
        .ok_or_else(|| CliError::Input(format!("response column '{}' not found", args.response)))?;
    let predictors: Vec<String> = match &args.predictors {
        Some(list) => list.clone(),
        None => table.headers.iter().filter(|h| **h != args.response).cloned().collect(),
    };
    if predictors.is_empty() {
        return Err(CliError::Input("need at least one predictor column".into()));
    }
    let mut predictor_cols = Vec::new();
    for p in &predictors {
        if *p == args.response {
            return Err(CliError::Input(format!("'{p}' is both response and predictor")));
        }
        predictor_cols.push(
            table
                .column_index(p)
                .ok_or_else(|| CliError::Input(format!("predictor column '{p}' not found")))?,
        );
    }
    let x = table.matrix(&predictor_cols);
    let y = table.column(response_col);
    let dataset = ingest(&x, &y, !args.no_standardize).map_err(|e| match e {
        SicError::ConstantColumn(j) => CliError::Input(format!("predictor '{}' is constant", predictors[j - 1])),
        other => other.into(),
    })?;
    Ok(LoadedData {
        dataset,
        predictors,
        fingerprint: sha256_hex(&bytes),
        raw: table,
        predictor_cols,
        response_col,
    })
}

fn mode(args: &DataArgs) -> FitMode {
    if args.spr {
        FitMode::Spr
    } else {
        FitMode::Mpr
    }
}

fn fit_data(
    loaded: &LoadedData,
    mode: FitMode,
    schedule: &TelescopeSchedule,
    cfg: &SolverConfig,
) -> Result<FitResult, CliError> {
    let data = &loaded.dataset;
    let trace = fit_free(data, schedule, cfg, &mode.free_set(data.p()))?;
    Ok(summarize(data, trace, mode, cfg)?)
}

fn emit_csv(out: Option<&Path>, stdout: &mut dyn Write, headers: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let f = std::fs::File::create(path)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
            write_csv(std::io::BufWriter::new(f), headers, rows)
        }
        None => write_csv(stdout, headers, rows),
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn coverage_text(c: &Coverage) -> String {
    format!(
        "PCP overall {}  low {}  medium {}  high {}  (rows per group {} / {} / {})\n",
        fmt6(c.overall),
        opt_or_dash(c.low),
        opt_or_dash(c.medium),
        opt_or_dash(c.high),
        c.counts[0],
        c.counts[1],
        c.counts[2]
    )
}

fn opt_or_dash(v: Option<f64>) -> String {
    v.map(fmt6).unwrap_or_else(|| "-".into())
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Fit {
            data,
            solver,
            out,
            no_delta_bic,
            cv_folds,
            seed,
            level,
        } => {
            let cfg = solver.config()?;
            let schedule = solver.schedule(None)?;
            let loaded = load_training(&data)?;
            let mode = mode(&data);
            let mut fit = fit_data(&loaded, mode, &schedule, &cfg)?;
            if !no_delta_bic {
                fill_delta_bic(&loaded.dataset, &mut fit, &schedule, &cfg)?;
            }
            let model = ModelFile::from_fit(
                &fit,
                &data.response,
                &loaded.predictors,
                loaded.dataset.n(),
                &loaded.dataset.scaling,
                &schedule,
                &cfg,
                loaded.fingerprint.clone(),
            );
            write!(stdout, "{}", report::fit_table(&model)).map_err(io)?;
            if let Some(k) = cv_folds {
                let x = loaded.raw.matrix(&loaded.predictor_cols);
                let y = loaded.raw.column(loaded.response_col);
                let cov = cross_validated_coverage(
                    &x,
                    &y,
                    !data.no_standardize,
                    k,
                    seed,
                    level,
                    &SigmaCategories::ModelTertiles,
                    mode,
                    &schedule,
                    &cfg,
                )?;
                write!(stdout, "{k}-fold cross-validated {}", coverage_text(&cov)).map_err(io)?;
            }
            if let Some(path) = out {
                model.save(&path)?;
            }
            Ok(())
        }
        Command::Path { data, solver, out } => {
            let cfg = solver.config()?;
            let schedule = solver.schedule(None)?;
            let loaded = load_training(&data)?;
            let d = &loaded.dataset;
            let trace = fit_free(d, &schedule, &cfg, &mode(&data).free_set(d.p()))?;
            let rows = report::path_rows(&trace, &loaded.predictors);
            emit_csv(out.as_deref(), stdout, &report::PATH_HEADERS, &rows)
        }
        Command::Predict {
            model,
            data,
            level,
            actual,
            sigma_thresholds,
            out,
            density_out,
            density_points,
        } => cmd_predict(
            &model,
            &data,
            level,
            actual.as_deref(),
            sigma_thresholds,
            out.as_deref(),
            density_out.as_deref(),
            density_points,
            stdout,
        ),
        Command::Simulate {
            scenario,
            reps,
            sizes,
            seed,
            jobs,
            spr,
            solver,
            out,
        } => {
            let mut file = resolve_scenario(&scenario)?;
            if let Some(r) = reps {
                file.scenario.replicates = r;
            }
            if let Some(s) = sizes {
                file.scenario.sample_sizes = s;
            }
            if let Some(s) = seed {
                file.scenario.seed = s;
            }
            if spr {
                file.methods = vec![FitMode::Spr];
            }
            let cfg = solver.config()?;
            let schedule = solver.schedule(file.schedule.as_ref())?;
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let report = run_study(&file.scenario, &file.methods, &schedule, &cfg, jobs)?;
            write!(stdout, "{}", report::study_text(&report)).map_err(io)?;
            if let Some(path) = out {
                emit_csv(Some(&path), stdout, &report::STUDY_HEADERS, &report::study_rows(&report))?;
            }
            Ok(())
        }
        Command::DeltaBic {
            data,
            solver,
            component,
            term,
            out,
        } => {
            let cfg = solver.config()?;
            let schedule = solver.schedule(None)?;
            let loaded = load_training(&data)?;
            let mut fit = fit_data(&loaded, mode(&data), &schedule, &cfg)?;
            let index = match &term {
                None => None,
                Some(t) => Some(
                    loaded
                        .predictors
                        .iter()
                        .position(|p| p == t)
                        .map(|j| j + 1)
                        .ok_or_else(|| CliError::Input(format!("unknown term '{t}'")))?,
                ),
            };
            let wanted = |c: Component, j: usize| component.is_none_or(|x| x == c) && index.is_none_or(|x| x == j);
            let mut deltas: Vec<DeltaBic> = Vec::new();
            for c in Component::BOTH {
                for &j in fit.active(c).iter().filter(|&&j| j > 0 && wanted(c, j)) {
                    let value = sicreg::inference::delta_bic(&loaded.dataset, &fit, c, j, &schedule, &cfg)?;
                    deltas.push(DeltaBic { component: c, index: j, value });
                }
            }
            if deltas.is_empty() && (component.is_some() || index.is_some()) {
                return Err(CliError::Input("the requested coefficient is not active in the fitted model".into()));
            }
            fit.delta_bic = deltas;
            let rows: Vec<Vec<String>> = fit
                .delta_bic
                .iter()
                .map(|d| {
                    vec![
                        d.component.name().to_owned(),
                        term_name(&loaded.predictors, d.index).to_owned(),
                        fmt6(fit.theta_orig.component(d.component)[d.index]),
                        fmt6(d.value),
                    ]
                })
                .collect();
            emit_csv(out.as_deref(), stdout, &["component", "term", "estimate", "delta_bic"], &rows)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_predict(
    model_path: &Path,
    data_path: &Path,
    level: f64,
    actual: Option<&str>,
    thresholds: Option<Vec<f64>>,
    out: Option<&Path>,
    density_out: Option<&Path>,
    density_points: usize,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let model = ModelFile::load(model_path)?;
    let table = read_table(data_path)?;
    let missing: Vec<&str> = model
        .predictors
        .iter()
        .filter(|p| table.column_index(p).is_none())
        .map(String::as_str)
        .collect();
    let extra: Vec<&str> = table
        .headers
        .iter()
        .filter(|h| !model.predictors.contains(h) && Some(h.as_str()) != actual && **h != model.response)
        .map(String::as_str)
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(CliError::Input(format!(
            "column mismatch: missing [{}]; extra [{}]",
            missing.join(", "),
            extra.join(", ")
        )));
    }
    let actual_col = match actual {
        Some(a) => Some(
            table
                .column_index(a)
                .ok_or_else(|| CliError::Input(format!("actual column '{a}' not found")))?,
        ),
        None => None,
    };
    let cols: Vec<usize> = model
        .predictors
        .iter()
        .map(|p| table.column_index(p).expect("checked above"))
        .collect();
    let theta = model.theta();
    let mut rows = Vec::with_capacity(table.rows.len());
    let mut hits = Vec::new();
    let mut sigma = Vec::new();
    let mut density_rows = Vec::new();
    for (i, r) in table.rows.iter().enumerate() {
        let mut x = vec![1.0];
        x.extend(cols.iter().map(|&c| r[c]));
        let pi = predict(&theta, &x, level)?;
        rows.push(vec![
            (i + 1).to_string(),
            fmt6(pi.mean),
            fmt6(pi.variance),
            fmt6(pi.lower),
            fmt6(pi.upper),
        ]);
        if let Some(c) = actual_col {
            hits.push(r[c] >= pi.lower && r[c] <= pi.upper);
            sigma.push(pi.variance.sqrt());
        }
        if density_out.is_some() {
            let sd = pi.variance.sqrt();
            let k = density_points.max(2);
            let grid: Vec<f64> = (0..k)
                .map(|g| pi.mean - 4.0 * sd + 8.0 * sd * g as f64 / (k - 1) as f64)
                .collect();
            let dens = conditional_density(&theta, &x, &grid)?;
            for (y, d) in grid.iter().zip(dens) {
                density_rows.push(vec![(i + 1).to_string(), fmt6(*y), fmt6(d)]);
            }
        }
    }
    emit_csv(out, stdout, &["row", "mean", "variance", "lower", "upper"], &rows)?;
    if let Some(path) = density_out {
        emit_csv(Some(path), stdout, &["row", "y", "density"], &density_rows)?;
    }
    if actual_col.is_some() {
        let categories = match thresholds.as_deref() {
            Some([lo, hi]) if lo <= hi => SigmaCategories::ModelThresholds { low: *lo, high: *hi },
            Some(_) => return Err(CliError::Input("sigma thresholds must be low,high with low <= high".into())),
            None => SigmaCategories::ModelTertiles,
        };
        let cov = sicreg::inference::coverage_from_hits(&hits, &sigma, &categories)?;
        let text = coverage_text(&cov);
        if out.is_some() {
            write!(stdout, "{text}").map_err(io)?;
        } else {
            eprint!("{text}");
        }
    }
    Ok(())
}
