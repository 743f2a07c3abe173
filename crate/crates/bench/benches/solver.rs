use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sicreg::model::{ingest, observed_information};
use sicreg::simlab::{gen_design, gen_response, replicate_rng, Scenario};
use sicreg::solver::{fit_spr, newton_at_epsilon, sic_gradient_and_system, telescope_fit};
use sicreg::{Dataset, Epsilon, SolverConfig, TelescopeSchedule};

fn table2_data(n: usize) -> Dataset {
    let s = Scenario::table2();
    let mut rng = replicate_rng(s.seed, 0, 0);
    let x = gen_design(&s, n, &mut rng);
    let y = gen_response(&x, &s.truth(), &mut rng).unwrap();
    ingest(&x, &y, true).unwrap()
}

fn derivatives(c: &mut Criterion) {
    let mut g = c.benchmark_group("derivatives");
    for n in [100, 1000] {
        let data = table2_data(n);
        let theta = telescope_fit(&data, &TelescopeSchedule::default(), &SolverConfig::default())
            .unwrap()
            .final_theta;
        let eps = Epsilon::new(1e-3).unwrap();
        g.bench_with_input(BenchmarkId::new("penalized_system", n), &n, |b, _| {
            b.iter(|| sic_gradient_and_system(&theta, &data, eps).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("observed_information", n), &n, |b, _| {
            b.iter(|| observed_information(&theta, &data).unwrap())
        });
    }
    g.finish();
}

fn inner_loop(c: &mut Criterion) {
    let data = table2_data(500);
    let start = sicreg::solver::initialize(&data).unwrap();
    let cfg = SolverConfig::default();
    c.bench_function("newton_at_epsilon/n500_eps1", |b| {
        b.iter(|| newton_at_epsilon(&start, &data, Epsilon::new(1.0).unwrap(), &cfg).unwrap())
    });
}

fn telescope(c: &mut Criterion) {
    let mut g = c.benchmark_group("telescope");
    g.sample_size(10);
    let cfg = SolverConfig::default();
    let schedule = TelescopeSchedule::default();
    for n in [100, 500, 1000] {
        let data = table2_data(n);
        g.bench_with_input(BenchmarkId::new("mpr", n), &n, |b, _| {
            b.iter(|| telescope_fit(&data, &schedule, &cfg).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("spr", n), &n, |b, _| {
            b.iter(|| fit_spr(&data, &schedule, &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, derivatives, inner_loop, telescope);
criterion_main!(benches);
