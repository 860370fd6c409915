use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lossy_helmholtz::{
    assemble_dirichlet, oracle_fields, solve_dirichlet, solve_dirichlet_mode, solve_robin,
    vnorm_error, ErrorPair, Mode,
};
use lossy_helmholtz_bench::{disc_scene, reference_problem, serial};

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_dirichlet");
    for n in [30, 60, 100] {
        let (g, m, d) = reference_problem(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| assemble_dirichlet(black_box(&g), &m, &d, Mode::RealPrimal).unwrap())
        });
    }
    group.finish();
}

fn krylov(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_real_primal");
    group.sample_size(10);
    let (g, m, d) = reference_problem(30);
    let pcg = serial();
    let cg = lossy_helmholtz::SolverOptions {
        precondition: false,
        ..serial()
    };
    group.bench_function("pcg_n30", |b| {
        b.iter(|| solve_dirichlet_mode(&g, &m, &d, Mode::RealPrimal, &pcg).unwrap())
    });
    group.bench_function("cg_n30", |b| {
        b.iter(|| solve_dirichlet_mode(&g, &m, &d, Mode::RealPrimal, &cg).unwrap())
    });
    group.finish();
}

fn scenes(c: &mut Criterion) {
    let mut group = c.benchmark_group("scenes");
    group.sample_size(10);
    let (g, m, r) = disc_scene(60);
    group.bench_function("robin_disc_n60", |b| {
        b.iter(|| solve_robin(&g, &m, &r, &serial()).unwrap())
    });
    let (g, m, d) = reference_problem(30);
    let sol = solve_dirichlet(&g, &m, &d, &serial()).unwrap();
    let ex = oracle_fields();
    group.bench_function("vnorm_error_eval1500", |b| {
        b.iter(|| vnorm_error(&sol, &ex, 1500, ErrorPair::RealPrimal))
    });
    group.finish();
}

criterion_group!(benches, assembly, krylov, scenes);
criterion_main!(benches);
