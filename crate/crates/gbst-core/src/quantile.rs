//! Weighted-quantile candidate generation and the approximate split search
//! built on it.
//!
//! Split candidates are proposed per period from the hessian-weighted rank
//! function over the at-risk samples, then pooled across periods. Gains are
//! evaluated only at the pooled candidates, capping the scan cost at about
//! `J * ceil(1/eps)` boundaries per feature.

use rayon::prelude::*;

use crate::survival::{GradientField, KahanSum};
use crate::tree::{
    decision_from_candidate, reduce_feature_results, GrowParams, NodeStats, SplitDecision,
    TrainingData,
};

/// Sorted (value, weight) pairs for one feature within one period's risk set.
#[derive(Debug, Clone)]
pub struct WeightedFeatureView {
    entries: Vec<(f64, f64)>,
    total: f64,
}

impl WeightedFeatureView {
    /// Builds the view from unsorted pairs; weights must be positive.
    pub fn new(mut entries: Vec<(f64, f64)>) -> Self {
        entries.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("non-finite feature"));
        let mut total = KahanSum::default();
        for &(_, w) in &entries {
            total.add(w);
        }
        Self { entries, total: total.value() }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }
}

/// Rank function `g(z)`: fraction of total weight strictly below `z`.
/// Returns 0 for a degenerate (zero total weight) view.
pub fn rank_function(z: f64, view: &WeightedFeatureView) -> f64 {
    if view.total <= 0.0 {
        return 0.0;
    }
    let mut below = KahanSum::default();
    for &(x, w) in &view.entries {
        if x < z {
            below.add(w);
        } else {
            break;
        }
    }
    below.value() / view.total
}

/// Distinct values of a view with the rank of each (weight strictly below,
/// normalized).
fn distinct_ranks(view: &WeightedFeatureView) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut below = KahanSum::default();
    for &(x, w) in &view.entries {
        match out.last() {
            Some(&(last, _)) if last == x => {}
            _ => out.push((x, below.value() / view.total)),
        }
        below.add(w);
    }
    out
}

/// Per-period candidate sweep: starting from the period minimum, a value is
/// admitted when skipping it would let the rank gap since the last candidate
/// reach `eps` at the next value. The period maximum is always kept.
fn period_candidates(view: &WeightedFeatureView, eps: f64, out: &mut Vec<f64>) {
    let distinct = distinct_ranks(view);
    if distinct.is_empty() {
        return;
    }
    out.push(distinct[0].0);
    if distinct.len() == 1 {
        return;
    }
    let mut anchor = distinct[0].1;
    for d in 1..distinct.len() - 1 {
        let (v, g) = distinct[d];
        let g_next = distinct[d + 1].1;
        if g_next - anchor >= eps {
            out.push(v);
            anchor = g;
        }
    }
    out.push(distinct[distinct.len() - 1].0);
}

/// Pooled split candidates for one feature: the union of the per-period
/// sweeps plus each period's min/max, sorted and deduplicated, hard-capped
/// at `J * ceil(1/eps) + 2` by even thinning that keeps the endpoints.
pub fn propose_candidates(
    data: &TrainingData,
    gradients: &GradientField,
    samples: &[usize],
    feature: usize,
    eps: f64,
) -> Vec<f64> {
    let j_count = data.period_count;
    let col = &data.columns[feature];
    let mut pooled: Vec<f64> = Vec::new();
    for j in 0..j_count {
        let entries: Vec<(f64, f64)> = samples
            .iter()
            .filter(|&&i| data.event_periods[i] > j)
            .map(|&i| (col[i], gradients.pair(i, j).1))
            .collect();
        if entries.is_empty() {
            continue;
        }
        let view = WeightedFeatureView::new(entries);
        period_candidates(&view, eps, &mut pooled);
    }
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pooled.dedup();
    let cap = j_count * (1.0 / eps).ceil() as usize + 2;
    if pooled.len() > cap && cap >= 2 {
        let mut thinned = Vec::with_capacity(cap);
        for t in 0..cap {
            let idx = t * (pooled.len() - 1) / (cap - 1);
            thinned.push(pooled[idx]);
        }
        thinned.dedup();
        pooled = thinned;
    }
    pooled
}

/// Best split for one feature evaluated only at the pooled candidates,
/// `x <= s` going left. Ties keep the smallest threshold.
fn sweep_feature_candidates(
    data: &TrainingData,
    gradients: &GradientField,
    in_node: &[bool],
    node_size: usize,
    parent: &NodeStats,
    feature: usize,
    candidates: &[f64],
    lambda: f64,
    min_child_count: usize,
) -> Option<(f64, f64)> {
    let col = &data.columns[feature];
    let j_count = data.period_count;
    let min_child = min_child_count.max(1);
    let mut left_grad = vec![KahanSum::default(); j_count];
    let mut left_hess = vec![KahanSum::default(); j_count];
    let mut left_count = 0usize;
    let mut best: Option<(f64, f64)> = None;

    let order: Vec<usize> = data.sorted_orders[feature]
        .iter()
        .map(|&i| i as usize)
        .filter(|&i| in_node[i])
        .collect();
    let mut pos = 0usize;
    for &s in candidates {
        while pos < order.len() && col[order[pos]] <= s {
            let i = order[pos];
            let last = data.event_periods[i].min(j_count);
            for j in 0..last {
                let (r, sg) = gradients.pair(i, j);
                left_grad[j].add(r);
                left_hess[j].add(sg);
            }
            left_count += 1;
            pos += 1;
        }
        if left_count < min_child || node_size - left_count < min_child {
            continue;
        }
        let mut gain = 0.0;
        for j in 0..j_count {
            let (wl, vl) = (left_grad[j].value(), left_hess[j].value());
            let (wr, vr) = (parent.grad[j] - wl, parent.hess[j] - vl);
            gain += term(wl, vl, lambda) + term(wr, vr, lambda)
                - term(parent.grad[j], parent.hess[j], lambda);
        }
        gain *= 0.5;
        if best.map_or(true, |(g, _)| gain > g) {
            best = Some((gain, s));
        }
    }
    best
}

fn term(w: f64, v: f64, lambda: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        w * w / (v + lambda)
    }
}

/// Approximate split search over quantile candidates; same tie-breaking and
/// child constraints as the exact search.
pub fn find_best_split_quantile(
    data: &TrainingData,
    gradients: &GradientField,
    samples: &[usize],
    in_node: &[bool],
    parent: &NodeStats,
    params: &GrowParams,
    eps: f64,
) -> Option<SplitDecision> {
    if samples.len() < 2 {
        return None;
    }
    let results: Vec<Option<(f64, f64)>> = (0..data.n_features())
        .into_par_iter()
        .map(|k| {
            let candidates = propose_candidates(data, gradients, samples, k, eps);
            sweep_feature_candidates(
                data,
                gradients,
                in_node,
                samples.len(),
                parent,
                k,
                &candidates,
                params.lambda,
                params.min_child_count,
            )
        })
        .collect();
    decision_from_candidate(data, samples, reduce_feature_results(results), params.min_gain)
}
