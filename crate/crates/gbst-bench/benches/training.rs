//! Full training runs: exact vs quantile mode, and prediction throughput.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gbst_bench::bench_dataset;
use gbst_core::booster::{fit, predict_survival, BoosterParams};
use gbst_core::tree::SplitMode;

fn bench_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for &n in &[2_000usize, 10_000] {
        let ds = bench_dataset(n, 10, 12);
        for (label, mode) in
            [("exact", SplitMode::Exact), ("quantile", SplitMode::Quantile { eps: 0.05 })]
        {
            let params = BoosterParams {
                num_trees: 10,
                subsample_rate: 0.5,
                split_mode: mode,
                ..Default::default()
            };
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
                b.iter(|| fit(&ds, &params).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_predict(c: &mut Criterion) {
    let ds = bench_dataset(2_000, 10, 12);
    let model =
        fit(&ds, &BoosterParams { num_trees: 30, ..Default::default() }).unwrap();
    c.bench_function("predict_survival_2000", |b| {
        b.iter(|| {
            for rec in &ds.records {
                predict_survival(&model, &rec.features).unwrap();
            }
        })
    });
}

criterion_group!(benches, bench_fit, bench_predict);
criterion_main!(benches);
