use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use moodyn_core::problems::{mop_ex1_problem, mop_ex2_problem, random_quadratics};
use moodyn_core::{integrate, min_norm_combination, regularization_path, solve_scalarized, DynParams};

fn simplex_qp(c: &mut Criterion) {
    let problem = random_quadratics(1, 8, 4, 10.0).unwrap();
    let grads = problem.gradients(&[0.5; 8]);
    let zero = vec![0.0; 8];
    c.bench_function("min_norm_combination n=8 m=4", |b| {
        b.iter(|| min_norm_combination(black_box(&grads), &zero).unwrap())
    });
    let problem = random_quadratics(2, 20, 12, 10.0).unwrap();
    let grads = problem.gradients(&[0.25; 20]);
    let zero = vec![0.0; 20];
    c.bench_function("min_norm_combination n=20 m=12", |b| {
        b.iter(|| min_norm_combination(black_box(&grads), &zero).unwrap())
    });
}

fn scalarization(c: &mut Criterion) {
    let problem = mop_ex2_problem();
    c.bench_function("solve_scalarized mop-ex2", |b| {
        b.iter(|| solve_scalarized(&problem, black_box(&[0.0, 0.0]), 0.1, &[2.0, 3.0, 4.0, 5.0], 1e-10).unwrap())
    });
    let problem = mop_ex1_problem();
    let params = DynParams::new(4.0, 0.5, 1.75, 0.875, 1.0, 1e-2, 10.0);
    let traj = integrate(&problem, &params, &[2.5, 0.5], &[0.0, 0.0]).unwrap();
    c.bench_function("regularization_path mop-ex1 T=10 stride 10", |b| {
        b.iter(|| regularization_path(&problem, black_box(&traj), &params, 10).unwrap())
    });
}

fn integration(c: &mut Criterion) {
    let problem = mop_ex1_problem();
    let params = DynParams::new(4.0, 0.5, 1.75, 0.875, 1.0, 1e-2, 100.0);
    c.bench_function("integrate mop-ex1 1e4 steps", |b| {
        b.iter(|| integrate(&problem, black_box(&params), &[2.5, 0.5], &[0.0, 0.0]).unwrap())
    });
    let problem = mop_ex2_problem();
    let params = DynParams::new(4.0, 0.5, 1.75, 0.8, 1.0, 1e-3, 11.0);
    c.bench_function("integrate mop-ex2 1e4 steps", |b| {
        b.iter(|| integrate(&problem, black_box(&params), &[2.0, 3.0, 4.0, 5.0], &[0.0; 4]).unwrap())
    });
}

criterion_group!(benches, simplex_qp, scalarization, integration);
criterion_main!(benches);
