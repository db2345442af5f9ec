//! Single-threaded versus pooled runs of the data-parallel kernels.
//!
//! Build with `--no-default-features` to measure the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use std::sync::Arc;

use ffavg::experiments::{run_sweep, ExtremizerSpec, JPolicy, SweepConfig};
use ffavg::grid::vee_transform;
use ffavg::operators::{extremizer, maximal_average, ExtremizerKind};
use ffavg::{par, ExponentPair, FieldCtx};

fn thread_counts() -> Vec<usize> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    if all > 1 {
        vec![1, all]
    } else {
        vec![1]
    }
}

fn transforms(c: &mut Criterion) {
    let ctx = Arc::new(FieldCtx::new(31).unwrap());
    let f = extremizer(&ctx, 3, ExtremizerKind::RandomSign(1)).unwrap();
    let mut g = c.benchmark_group("vee_transform_q31_d3");
    for t in thread_counts() {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| par::with_threads(t, || black_box(vee_transform(&f))))
        });
    }
    g.finish();
}

fn maximal(c: &mut Criterion) {
    let ctx = Arc::new(FieldCtx::new(13).unwrap());
    let f = extremizer(&ctx, 3, ExtremizerKind::RandomNonneg(2)).unwrap();
    let mut g = c.benchmark_group("maximal_average_q13_d3");
    g.sample_size(10);
    for t in thread_counts() {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| par::with_threads(t, || black_box(maximal_average(&f).unwrap())))
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let pr = ExponentPair::inv_parts(2, 3, 1, 3).unwrap();
    let mut config = SweepConfig::averaging(2, vec![5, 7, 11, 13, 17], vec![pr], JPolicy::All, 0);
    config.extremizers = ExtremizerSpec::default_suite(0);
    let mut g = c.benchmark_group("sweep_averaging_d2");
    g.sample_size(10);
    for t in thread_counts() {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| par::with_threads(t, || black_box(run_sweep(config.clone()).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, transforms, maximal, sweep);
criterion_main!(benches);
