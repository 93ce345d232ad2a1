use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lakeopt_core::surrogate::{init_model_scaled, DEFAULT_HIDDEN};
use lakeopt_core::{genetic_algorithm, sobol_jansen, sobol_sample, BoxedProblem, GaConfig};

const INPUTS: [&str; 6] = ["P", "R", "G", "E", "Ur", "Ug"];

fn mlp(c: &mut Criterion) {
    let model = init_model_scaled(&INPUTS, "H", &DEFAULT_HIDDEN, 1, 2.0).unwrap();
    let x = [0.1, 0.5, 0.9, 0.3, 0.7, 0.2];
    c.bench_function("mlp_forward", |b| {
        b.iter(|| model.forward_unchecked(black_box(&x)))
    });
    c.bench_function("mlp_input_gradient", |b| {
        b.iter(|| model.input_gradient_unchecked(black_box(&x)))
    });
}

fn sobol(c: &mut Criterion) {
    let model = init_model_scaled(&INPUTS, "H", &DEFAULT_HIDDEN, 1, 2.0).unwrap();
    let design = sobol_sample(6, 1000, 1).unwrap();
    let f = |x: &[f64]| model.forward_unchecked(x);
    let mut group = c.benchmark_group("sobol");
    group.sample_size(20);
    group.bench_function("jansen_mlp_n6_s1000", |b| {
        b.iter(|| sobol_jansen(&f, black_box(&design)).unwrap())
    });
    group.finish();
}

fn ga(c: &mut Criterion) {
    let problem = BoxedProblem::new(
        |x: &[f64]| -x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>(),
        vec![0.0; 5],
        vec![1.0; 5],
    )
    .unwrap();
    let cfg = GaConfig::default();
    let mut group = c.benchmark_group("optimizers");
    group.sample_size(10);
    group.bench_function("ga_quadratic_5d", |b| {
        b.iter(|| genetic_algorithm(black_box(&problem), &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, mlp, sobol, ga);
criterion_main!(benches);
