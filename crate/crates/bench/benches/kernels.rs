use std::hint::black_box;

use anoma_bench::Fixture;
use anoma_core::allocation::DEFAULT_EXACT_TOL;
use anoma_core::{
    alpha_anoma_exact, expected_rate, monte_carlo, optimize, AllocationMethod, ChannelGain,
    Objective, OptimizerConfig,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn exact_solver(c: &mut Criterion) {
    let f = Fixture::new(3);
    let h1 = ChannelGain::new(2.3).unwrap();
    let h2 = ChannelGain::new(0.7).unwrap();
    c.bench_function("alpha_anoma_exact", |b| {
        b.iter(|| alpha_anoma_exact(black_box(h1), black_box(h2), &f.params, DEFAULT_EXACT_TOL))
    });
}

fn closed_form_rate(c: &mut Criterion) {
    let mut group = c.benchmark_group("expected_rate");
    for bits in [3, 6] {
        let f = Fixture::new(bits);
        for variant in [
            AllocationMethod::AnomaLowerZ05,
            AllocationMethod::AnomaExact,
        ] {
            group.bench_with_input(BenchmarkId::new(variant.name(), bits), &f, |b, f| {
                b.iter(|| {
                    expected_rate(
                        &f.codebook1,
                        &f.codebook2,
                        &f.dist1,
                        &f.dist2,
                        &f.params,
                        variant,
                    )
                })
            });
        }
    }
    group.finish();
}

fn optimizer(c: &mut Criterion) {
    let f = Fixture::new(3);
    let objective = Objective {
        codebook1: &f.codebook1,
        codebook2: &f.codebook2,
        dist1: &f.dist1,
        dist2: &f.dist2,
        params: &f.params,
        variant: AllocationMethod::AnomaLowerZ05,
    };
    c.bench_function("gradient_z05_3bit", |b| {
        b.iter(|| black_box(&objective).gradient())
    });
    let config = OptimizerConfig {
        max_iterations: 1,
        variant: AllocationMethod::AnomaLowerZ05,
        ..OptimizerConfig::default()
    };
    c.bench_function("optimizer_iteration_z05_3bit", |b| {
        b.iter(|| {
            optimize(
                &f.codebook1,
                &f.codebook2,
                &f.dist1,
                &f.dist2,
                &f.params,
                &config,
            )
        })
    });
}

fn simulation(c: &mut Criterion) {
    let f = Fixture::new(3);
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("noma_100k", |b| {
        b.iter(|| {
            monte_carlo(
                &f.codebook1,
                &f.codebook2,
                &f.dist1,
                &f.dist2,
                &f.params,
                AllocationMethod::NomaClosedForm,
                100_000,
                7,
            )
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    exact_solver,
    closed_form_rate,
    optimizer,
    simulation
);
criterion_main!(benches);
