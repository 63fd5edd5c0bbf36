use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use tpsearch::cost::{cost, make_schedule, ScheduleParams};
use tpsearch::hilbert::{haar_state, haar_unitary, random_hermitian, reduced_system, rng_from_seed};
use tpsearch::optimizer::{
    environment_tensor, optimize_with, svd_update, Fiducial, Mode, OptimizerConfig, Target,
};
use tpsearch::{BipartiteDims, SpectralDecomposition};

fn sizes() -> [(u32, u32); 2] {
    [(1, 2), (2, 4)]
}

fn bench_cost(c: &mut Criterion) {
    let mut group = c.benchmark_group("cost");
    for (n_s, n_e) in sizes() {
        let dims = BipartiteDims::new(n_s, n_e).unwrap();
        let mut rng = rng_from_seed(1);
        let h = random_hermitian(dims.d_w(), &mut rng, false);
        let spec = SpectralDecomposition::new(&h).unwrap();
        let schedule = make_schedule(&spec, ScheduleParams::default()).unwrap();
        let b = haar_unitary(dims.d_w(), &mut rng);
        let psi = haar_state(dims.d_w(), &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(dims.d_w()), &dims, |bench, &dims| {
            bench.iter(|| cost(black_box(&psi), &b, &spec, &schedule, dims).unwrap().cost)
        });
    }
    group.finish();
}

fn bench_partial_trace(c: &mut Criterion) {
    let mut group = c.benchmark_group("partial_trace");
    for (n_s, n_e) in sizes() {
        let dims = BipartiteDims::new(n_s, n_e).unwrap();
        let psi = haar_state(dims.d_w(), &mut rng_from_seed(2));
        group.bench_with_input(BenchmarkId::from_parameter(dims.d_w()), &dims, |bench, &dims| {
            bench.iter(|| reduced_system(black_box(&psi), dims).unwrap())
        });
    }
    group.finish();
}

fn bench_environment_tensor(c: &mut Criterion) {
    let mut group = c.benchmark_group("environment_tensor");
    for (n_s, n_e) in sizes() {
        let dims = BipartiteDims::new(n_s, n_e).unwrap();
        let mut rng = rng_from_seed(3);
        let h = random_hermitian(dims.d_w(), &mut rng, false);
        let spec = SpectralDecomposition::new(&h).unwrap();
        let schedule = make_schedule(&spec, ScheduleParams::default()).unwrap();
        let b = haar_unitary(dims.d_w(), &mut rng);
        let a = haar_unitary(dims.d_w(), &mut rng);
        let fid = Fiducial::zeros(dims);
        for target in [Target::B, Target::A] {
            let id = format!("{target:?}/{}", dims.d_w());
            group.bench_function(id, |bench| {
                bench.iter(|| {
                    environment_tensor(target, Mode::GlobalState, &b, Some(&a), &fid, &spec, &schedule, dims).unwrap()
                })
            });
        }
    }
    group.finish();
}

fn bench_polar(c: &mut Criterion) {
    let mut group = c.benchmark_group("svd_update");
    for d in [8, 64] {
        let mut rng = rng_from_seed(4);
        let e = haar_unitary(d, &mut rng).into_inner() * tpsearch::C64::new(0.3, 0.1);
        let u = haar_unitary(d, &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |bench, _| {
            bench.iter(|| svd_update(black_box(&e), &u, 0.99).unwrap())
        });
    }
    group.finish();
}

fn bench_sweeps(c: &mut Criterion) {
    let dims = BipartiteDims::new(1, 2).unwrap();
    let h = random_hermitian(8, &mut rng_from_seed(5), false);
    let spec = SpectralDecomposition::new(&h).unwrap();
    let config = OptimizerConfig {
        mode: Mode::GlobalState,
        max_iterations: 100,
        acceptance_threshold: 1e-300,
        ..Default::default()
    };
    c.bench_function("optimize/100_sweeps/8", |bench| {
        bench.iter(|| optimize_with(&spec, &config, dims, &Fiducial::zeros(dims)).unwrap().final_cost)
    });
}

criterion_group!(benches, bench_cost, bench_partial_trace, bench_environment_tensor, bench_polar, bench_sweeps);
criterion_main!(benches);
