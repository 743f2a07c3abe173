//! Analytic derivatives against central finite differences.

mod common;

use common::random_dataset;
use proptest::prelude::*;
use sicreg::model::{log_likelihood, observed_information, score};
use sicreg::penalty::{phi, phi_derivatives};
use sicreg::solver::{sic_gradient_and_system, sic_objective};
use sicreg::{Epsilon, ParamVector};

fn perturbed(theta: &ParamVector, coord: usize, h: f64) -> ParamVector {
    let mut v = theta.stacked();
    v[coord] += h;
    ParamVector::from_stacked(&v)
}

fn rel_close(analytic: f64, numeric: f64, tol: f64) -> bool {
    (analytic - numeric).abs() <= tol * analytic.abs().max(1.0)
}

fn random_theta(p: usize, seed: u64, eps: f64) -> ParamVector {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    // Keep tails away from the sharp region |x| << eps so differences stay smooth.
    let mut draw = |j: usize, scale: f64| {
        if j == 0 {
            rng.random_range(-0.5..0.5)
        } else {
            let mag = rng.random_range(0.0..1.0) * scale + 0.1 * eps.min(1.0);
            if rng.random_bool(0.5) { mag } else { -mag }
        }
    };
    let beta: Vec<f64> = (0..=p).map(|j| draw(j, 1.0)).collect();
    let alpha: Vec<f64> = (0..=p).map(|j| draw(j, 0.3)).collect();
    ParamVector::new(beta, alpha).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn penalized_score_and_blocks_match_differences(
        seed in any::<u64>(),
        p in 1usize..6,
        n in 20usize..80,
        log_eps in -1.3f64..0.7,
    ) {
        let eps = Epsilon::new(10f64.powf(log_eps)).unwrap();
        let data = random_dataset(n, p, seed);
        let theta = random_theta(p, seed ^ 0x5eed, eps.value());
        let k = p + 1;
        let sys = sic_gradient_and_system(&theta, &data, eps).unwrap();
        let grad: Vec<f64> = sys.rhs_beta.iter().chain(&sys.rhs_alpha).copied().collect();

        let h = 1e-5 * eps.value().min(1.0);
        for (c, &g) in grad.iter().enumerate() {
            let up = sic_objective(&perturbed(&theta, c, h), &data, eps).unwrap();
            let dn = sic_objective(&perturbed(&theta, c, -h), &data, eps).unwrap();
            let fd = (up - dn) / (2.0 * h);
            prop_assert!(rel_close(g, fd, 1e-5), "gradient {c}: {g} vs {fd}");
        }

        // Negative Hessian blocks from differences of the (verified) gradient.
        let hh = 1e-6 * eps.value().min(1.0);
        for c in 0..2 * k {
            let g_up = sic_gradient_and_system(&perturbed(&theta, c, hh), &data, eps).unwrap();
            let g_dn = sic_gradient_and_system(&perturbed(&theta, c, -hh), &data, eps).unwrap();
            let (up, dn, block, col) = if c < k {
                (&g_up.rhs_beta, &g_dn.rhs_beta, &sys.lhs_beta, c)
            } else {
                (&g_up.rhs_alpha, &g_dn.rhs_alpha, &sys.lhs_alpha, c - k)
            };
            for r in 0..k {
                let fd = -(up[r] - dn[r]) / (2.0 * hh);
                prop_assert!(rel_close(block[(r, col)], fd, 1e-4), "block ({r},{col}): {} vs {fd}", block[(r, col)]);
            }
        }
    }

    #[test]
    fn observed_information_matches_score_differences(seed in any::<u64>(), p in 1usize..5) {
        let data = random_dataset(40, p, seed);
        let theta = random_theta(p, seed.wrapping_add(1), 1.0);
        let info = observed_information(&theta, &data).unwrap();
        let h = 1e-6;
        for c in 0..2 * (p + 1) {
            let (bu, au) = score(&perturbed(&theta, c, h), &data).unwrap();
            let (bd, ad) = score(&perturbed(&theta, c, -h), &data).unwrap();
            let up: Vec<f64> = bu.into_iter().chain(au).collect();
            let dn: Vec<f64> = bd.into_iter().chain(ad).collect();
            for r in 0..up.len() {
                let fd = -(up[r] - dn[r]) / (2.0 * h);
                prop_assert!(rel_close(info[(r, c)], fd, 1e-5), "({r},{c}): {} vs {fd}", info[(r, c)]);
            }
        }
    }

    #[test]
    fn score_matches_likelihood_differences(seed in any::<u64>(), p in 1usize..5) {
        let data = random_dataset(30, p, seed);
        let theta = random_theta(p, seed.wrapping_mul(3), 1.0);
        let (b, a) = score(&theta, &data).unwrap();
        let g: Vec<f64> = b.into_iter().chain(a).collect();
        let h = 1e-6;
        for (c, gc) in g.iter().enumerate() {
            let fd = (log_likelihood(&perturbed(&theta, c, h), &data).unwrap()
                - log_likelihood(&perturbed(&theta, c, -h), &data).unwrap())
                / (2.0 * h);
            prop_assert!(rel_close(*gc, fd, 1e-6));
        }
    }

    #[test]
    fn phi_derivatives_match_differences(x in -5.0f64..5.0, log_eps in -2.0f64..1.0) {
        let eps = Epsilon::new(10f64.powf(log_eps)).unwrap();
        let h = 1e-6 * eps.value();
        let (d1, d2) = phi_derivatives(x, eps);
        let fd1 = (phi(x + h, eps) - phi(x - h, eps)) / (2.0 * h);
        let fd2 = (phi_derivatives(x + h, eps).0 - phi_derivatives(x - h, eps).0) / (2.0 * h);
        let scale = 1.0 / eps.value();
        prop_assert!((d1 - fd1).abs() <= 1e-6 * scale.max(d1.abs()));
        prop_assert!((d2 - fd2).abs() <= 1e-5 * (scale * scale).max(d2.abs()));
    }

    #[test]
    fn phi_is_even_bounded_and_decreasing_in_eps(x in -1e3f64..1e3, e in 1e-3f64..1e2) {
        let eps = Epsilon::new(e).unwrap();
        let v = phi(x, eps);
        prop_assert!((0.0..1.0).contains(&v));
        prop_assert_eq!(v, phi(-x, eps));
        if x != 0.0 && v > 1e-12 && v < 1.0 - 1e-12 {
            prop_assert!(phi(x, Epsilon::new(e * 1.5).unwrap()) < v);
        }
    }
}
