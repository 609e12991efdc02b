use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use harperlab_core::cube::layer;
use harperlab_core::exec::ExecMode;
use harperlab_core::stability::{best_center, CenterMode};
use harperlab_core::sweeps;

fn label(mode: ExecMode) -> &'static str {
    match mode {
        ExecMode::Auto => "auto",
        ExecMode::Sequential => "sequential",
    }
}

fn bench_modes(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweeps");
    group.sample_size(10);
    for mode in [ExecMode::Auto, ExecMode::Sequential] {
        group.bench_with_input(
            BenchmarkId::new("harper-exhaustive-n4", label(mode)),
            &mode,
            |b, &m| b.iter(|| sweeps::harper_exhaustive(4, m).unwrap()),
        );
        group.bench_with_input(
            BenchmarkId::new("layer-families-6-3", label(mode)),
            &mode,
            |b, &m| b.iter(|| sweeps::layer_family_sweep(6, 3, m).unwrap()),
        );
        group.bench_with_input(
            BenchmarkId::new("lym-sampled-8-4", label(mode)),
            &mode,
            |b, &m| b.iter(|| sweeps::lym_sampled(8, 4, 5_000, 0, m).unwrap()),
        );
    }
    group.finish();

    let sphere = layer(14, 2).unwrap().to_vertex_set();
    let mut group = c.benchmark_group("center-scan");
    group.sample_size(10);
    for mode in [ExecMode::Auto, ExecMode::Sequential] {
        group.bench_with_input(
            BenchmarkId::new("exact-n14", label(mode)),
            &mode,
            |b, &m| b.iter(|| best_center(&sphere, 2, CenterMode::Exact, m).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_modes);
criterion_main!(benches);
