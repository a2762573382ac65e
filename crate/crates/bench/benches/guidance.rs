use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use strelgen_bench::{formula, graph, lane_context, FORMULAS};
use strelgen_core::generator::sample_latent;
use strelgen_core::guidance::{objective_and_gradient, optimize, Problem};
use strelgen_core::{GeneratorConfig, GuidanceConfig, ToyDecoder};

const HORIZON: usize = 12;

fn gradient(c: &mut Criterion) {
    let decoder = ToyDecoder::new(GeneratorConfig::default()).unwrap();
    let cfg = graph();
    let params = GuidanceConfig::default();
    let f = formula(FORMULAS[0].1);
    let mut group = c.benchmark_group("guidance/objective_and_gradient");
    for n in [4, 8] {
        let ctx = lane_context(n, HORIZON);
        let problem = Problem {
            decoder: &decoder,
            context: &ctx,
            formula: &f,
            graph: &cfg,
        };
        let z = sample_latent(1, decoder.latent_len(&ctx));
        group.bench_with_input(BenchmarkId::from_parameter(n), &z, |b, z| {
            b.iter(|| objective_and_gradient(&problem, black_box(z), &params).unwrap())
        });
    }
    group.finish();
}

fn optimise(c: &mut Criterion) {
    let decoder = ToyDecoder::new(GeneratorConfig::default()).unwrap();
    let cfg = graph();
    let params = GuidanceConfig {
        max_step: 20,
        max_restarts: 0,
        ..GuidanceConfig::default()
    };
    let f = formula(FORMULAS[1].1);
    let ctx = lane_context(5, HORIZON);
    let problem = Problem {
        decoder: &decoder,
        context: &ctx,
        formula: &f,
        graph: &cfg,
    };
    let z0 = sample_latent(2, decoder.latent_len(&ctx));
    let mut group = c.benchmark_group("guidance/optimize");
    group.sample_size(20);
    group.bench_function("surround_20_steps", |b| {
        b.iter(|| optimize(&problem, black_box(&z0), &params, 2).unwrap())
    });
    group.finish();
}

criterion_group!(benches, gradient, optimise);
criterion_main!(benches);
