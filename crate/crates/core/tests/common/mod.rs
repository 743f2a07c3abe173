#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sicreg::model::ingest;
use sicreg::simlab::{gen_design, gen_response, replicate_rng, Scenario};
use sicreg::Dataset;

/// Standardized data with mild heteroscedasticity driven by the first column.
pub fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let (x, y) = random_raw(n, p, seed);
    ingest(&x, &y, true).unwrap()
}

pub fn random_raw(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    let y = (0..n)
        .map(|i| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mean = 0.5 + x[(i, 0)];
            let sd = (0.3 * x[(i, 0)]).exp();
            mean + sd * z + 0.01 * rng.random_range(-1.0..1.0)
        })
        .collect();
    (x, y)
}

/// One replicate of a simulation scenario, as raw design and response.
pub fn scenario_raw(s: &Scenario, n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = replicate_rng(seed, 0, 0);
    let x = gen_design(s, n, &mut rng);
    let y = gen_response(&x, &s.truth(), &mut rng).unwrap();
    (x, y)
}
