//! Exact vs quantile split search at growing node sizes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gbst_bench::split_fixture;
use gbst_core::quantile::find_best_split_quantile;
use gbst_core::tree::{find_best_split_exact, GrowParams, NodeStats, SplitMode};

fn params() -> GrowParams {
    GrowParams {
        max_depth: 6,
        lambda: 0.001,
        min_gain: 0.0,
        min_child_count: 1,
        split_mode: SplitMode::Exact,
    }
}

fn bench_split_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("split_search");
    for &n in &[1_000usize, 10_000, 50_000] {
        let fx = split_fixture(n, 10, 12);
        let parent = NodeStats::compute(&fx.data, &fx.gradients, &fx.samples);
        let p = params();
        group.bench_with_input(BenchmarkId::new("exact", n), &n, |b, _| {
            b.iter(|| {
                find_best_split_exact(
                    &fx.data, &fx.gradients, &fx.samples, &fx.in_node, &parent, &p,
                )
            })
        });
        for eps in [0.1, 0.01] {
            group.bench_with_input(
                BenchmarkId::new(format!("quantile_eps_{eps}"), n),
                &n,
                |b, _| {
                    b.iter(|| {
                        find_best_split_quantile(
                            &fx.data, &fx.gradients, &fx.samples, &fx.in_node, &parent, &p, eps,
                        )
                    })
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_split_search);
criterion_main!(benches);
