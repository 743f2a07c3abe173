mod common;

use common::scenario_raw;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use sicreg::inference::{fit_model, prediction_coverage, sandwich_covariance};
use sicreg::model::{ingest, observed_information};
use sicreg::simlab::{run_study, true_sigma, Scenario};
use sicreg::solver::make_schedule;
use sicreg::{FitMode, ParamVector, SigmaCategories, SolverConfig, TelescopeSchedule};

#[test]
fn intercept_only_sandwich_is_sigma2_over_n() {
    let y: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64 - 50.0) / 17.0).collect();
    let data = ingest(&DMatrix::zeros(200, 0), &y, true).unwrap();
    let fit = fit_model(&data, &TelescopeSchedule::default(), &SolverConfig::default(), FitMode::Mpr).unwrap();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let s2 = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!((fit.theta_orig.beta[0] - mean).abs() < 1e-8);
    assert!((fit.se_beta[0] - (s2 / n).sqrt()).abs() < 1e-8 * fit.se_beta[0].max(1.0));
    assert!((fit.se_alpha[0] - (2.0 / n).sqrt()).abs() < 1e-6);
}

#[test]
fn sandwich_reduces_to_inverse_information_away_from_zero() {
    let (x, y) = scenario_raw(&Scenario::table2(), 1000, 4);
    let data = ingest(&x, &y, true).unwrap();
    let fit = fit_model(&data, &TelescopeSchedule::default(), &SolverConfig::default(), FitMode::Mpr).unwrap();
    let theta = &fit.trace.final_theta;
    let cov = sandwich_covariance(theta, &data, fit.trace.final_eps(), &fit.active_beta, &fit.active_alpha).unwrap();
    let k = data.x.ncols();
    let coords: Vec<usize> = fit.active_beta.iter().copied().chain(fit.active_alpha.iter().map(|j| j + k)).collect();
    let info = observed_information(theta, &data).unwrap();
    let sub = DMatrix::from_fn(coords.len(), coords.len(), |a, b| info[(coords[a], coords[b])]);
    let inv = sub.try_inverse().unwrap();
    for a in 0..coords.len() {
        let rel = (cov[(a, a)] - inv[(a, a)]).abs() / inv[(a, a)];
        assert!(rel < 1e-6, "coordinate {a}: {rel:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sandwich_is_positive_semidefinite(seed in 0u64..10_000) {
        let (x, y) = scenario_raw(&Scenario::table2(), 200, seed);
        let data = ingest(&x, &y, true).unwrap();
        let schedule = make_schedule(10.0, 1e-5, 40).unwrap();
        let fit = fit_model(&data, &schedule, &SolverConfig::default(), FitMode::Mpr).unwrap();
        let cov = sandwich_covariance(
            &fit.trace.final_theta, &data, fit.trace.final_eps(), &fit.active_beta, &fit.active_alpha,
        ).unwrap();
        let eig = SymmetricEigen::new(cov).eigenvalues;
        let top = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        prop_assert!(eig.iter().all(|&v| v >= -1e-10 * top), "{eig:?}");
    }
}

#[test]
fn correct_model_covers_at_nominal_rate() {
    let s = Scenario::table2();
    let (x, y) = scenario_raw(&s, 5000, 12);
    let test = ingest(&x, &y, false).unwrap();
    let c = prediction_coverage(&s.truth(), &test, 0.95, &SigmaCategories::ModelTertiles).unwrap();
    assert!((c.overall - 0.95).abs() < 0.02, "{}", c.overall);
    for g in [c.low, c.medium, c.high] {
        assert!((g.unwrap() - 0.95).abs() < 0.03);
    }
}

#[test]
fn constant_variance_miscalibrates_by_variability_group() {
    let s = Scenario::table2();
    let (x, y) = scenario_raw(&s, 5000, 13);
    let test = ingest(&x, &y, false).unwrap();
    let truth = s.truth();
    let sigma = true_sigma(&x, &truth);
    let pooled = sigma.iter().map(|v| v * v).sum::<f64>() / sigma.len() as f64;
    let mut constant = ParamVector::new(truth.beta.clone(), vec![0.0; truth.alpha.len()]).unwrap();
    constant.alpha[0] = pooled.ln();
    let mut sorted = sigma.clone();
    sorted.sort_by(f64::total_cmp);
    let cats = SigmaCategories::Reference {
        low: sorted[sorted.len() / 3],
        high: sorted[2 * sorted.len() / 3],
        sigma,
    };
    let c = prediction_coverage(&constant, &test, 0.95, &cats).unwrap();
    assert!(c.low.unwrap() > 0.98, "{c:?}");
    assert!(c.high.unwrap() < 0.89, "{c:?}");
}

#[test]
fn study_report_is_reproducible_and_thread_independent() {
    let s = Scenario {
        sample_sizes: vec![80],
        replicates: 6,
        ..Scenario::table2()
    };
    let schedule = make_schedule(10.0, 1e-5, 25).unwrap();
    let cfg = SolverConfig::default();
    let methods = [FitMode::Mpr, FitMode::Spr];
    let a = run_study(&s, &methods, &schedule, &cfg, 1).unwrap().without_timing();
    let b = run_study(&s, &methods, &schedule, &cfg, 3).unwrap().without_timing();
    assert_eq!(a, b);
    assert_eq!(a.cells.len(), 2);
    assert_eq!(a.cells[0].replicates, 6);
}
