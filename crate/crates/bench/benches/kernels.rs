use std::hint::black_box;

use conelab_bench::{laplace_green, pair, simons};
use conelab_core::boundary::gromov_delta_estimate;
use conelab_core::spectral::{dirichlet_eigen, DirichletConfig, LogGrid};
use conelab_core::{seeded_rng, LinkMode, OperatorSpec};
use criterion::{criterion_group, criterion_main, Criterion};

fn green(c: &mut Criterion) {
    let ge = laplace_green();
    let (x, y) = pair();
    c.bench_function("green evaluation", |b| b.iter(|| ge.green(black_box(&x), black_box(&y)).unwrap()));
}

fn dirichlet(c: &mut Criterion) {
    let cone = simons();
    let op = OperatorSpec::jacobi();
    let cfg = DirichletConfig::default();
    for n in [1024, 4096] {
        let grid = LogGrid::new(16.0, n).unwrap();
        c.bench_function(&format!("dirichlet eigen N={n}"), |b| {
            b.iter(|| dirichlet_eigen(&cone, &op, black_box(&grid), &LinkMode::zero(), &cfg).unwrap())
        });
    }
}

fn gromov(c: &mut Criterion) {
    let cone = simons();
    c.bench_function("gromov delta 1e4 quadruples", |b| {
        b.iter(|| gromov_delta_estimate(&cone, 10_000, 20.0, &mut seeded_rng(7)).unwrap())
    });
}

criterion_group!(benches, green, dirichlet, gromov);
criterion_main!(benches);
