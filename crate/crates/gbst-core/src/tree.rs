//! Survival-tree structure, optimal leaf weights, exact greedy split search
//! and recursive growth.
//!
//! Leaves carry one weight per observation period, so a single tree adjusts
//! the whole hazard trajectory of the records it routes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survival::{GradientField, KahanSum, SurvivalDataset};

/// Column-major training view shared read-only across nodes and iterations.
/// Feature orders are pre-sorted once per training run.
pub struct TrainingData {
    /// `n_features` columns of length `N`.
    pub columns: Vec<Vec<f64>>,
    /// Per feature, record indices sorted ascending by value (stable in index).
    pub sorted_orders: Vec<Vec<u32>>,
    /// `J(t_i)` per record.
    pub event_periods: Vec<usize>,
    pub period_count: usize,
}

impl TrainingData {
    pub fn from_dataset(dataset: &SurvivalDataset) -> Self {
        let n = dataset.n_records();
        let n_features = dataset.n_features();
        let mut columns = vec![Vec::with_capacity(n); n_features];
        for rec in &dataset.records {
            for (k, &v) in rec.features.iter().enumerate() {
                columns[k].push(v);
            }
        }
        let sorted_orders = columns
            .iter()
            .map(|col| {
                let mut order: Vec<u32> = (0..n as u32).collect();
                order.sort_by(|&a, &b| {
                    col[a as usize].partial_cmp(&col[b as usize]).expect("non-finite feature")
                });
                order
            })
            .collect();
        TrainingData {
            columns,
            sorted_orders,
            event_periods: dataset.records.iter().map(|r| r.event_period).collect(),
            period_count: dataset.grid.period_count(),
        }
    }

    pub fn n_records(&self) -> usize {
        self.event_periods.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Exact,
    Quantile { eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowParams {
    pub max_depth: usize,
    pub lambda: f64,
    pub min_gain: f64,
    pub min_child_count: usize,
    pub split_mode: SplitMode,
}

/// Per-period sums of first/second derivatives over a node's samples,
/// restricted to the period's risk set.
#[derive(Debug, Clone)]
pub struct NodeStats {
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    pub count: usize,
}

impl NodeStats {
    pub fn zero(period_count: usize) -> Self {
        Self { grad: vec![0.0; period_count], hess: vec![0.0; period_count], count: 0 }
    }

    /// Accumulates sample contributions in the order given, compensated.
    pub fn compute(data: &TrainingData, gradients: &GradientField, samples: &[usize]) -> Self {
        let j_count = data.period_count;
        let mut grad = vec![KahanSum::default(); j_count];
        let mut hess = vec![KahanSum::default(); j_count];
        for &i in samples {
            let last = data.event_periods[i].min(j_count);
            for j in 0..last {
                let (r, s) = gradients.pair(i, j);
                grad[j].add(r);
                hess[j].add(s);
            }
        }
        Self {
            grad: grad.iter().map(|k| k.value()).collect(),
            hess: hess.iter().map(|k| k.value()).collect(),
            count: samples.len(),
        }
    }

    pub fn period_count(&self) -> usize {
        self.grad.len()
    }
}

fn score_term(w: f64, v: f64, lambda: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        w * w / (v + lambda)
    }
}

/// Optimal per-period leaf weight `-W_j / (V_j + lambda)`; periods with no
/// at-risk samples in the leaf get weight 0.
pub fn leaf_weight(stats: &NodeStats, lambda: f64) -> Vec<f64> {
    stats
        .grad
        .iter()
        .zip(&stats.hess)
        .map(|(&w, &v)| if v == 0.0 { 0.0 } else { -w / (v + lambda) })
        .collect()
}

/// Structure score `-(1/2) sum_{j,l} W_{j,l}^2 / (V_{j,l} + lambda)` over a
/// complete leaf partition.
pub fn structure_score(leaves: &[NodeStats], lambda: f64) -> f64 {
    let mut acc = 0.0;
    for stats in leaves {
        for (&w, &v) in stats.grad.iter().zip(&stats.hess) {
            acc += score_term(w, v, lambda);
        }
    }
    -0.5 * acc
}

/// Loss reduction of splitting `parent` into `(left, right)`, including the
/// 1/2 factor. Empty-period terms contribute 0.
pub fn split_gain(parent: &NodeStats, left: &NodeStats, right: &NodeStats, lambda: f64) -> f64 {
    let mut gain = 0.0;
    for j in 0..parent.period_count() {
        debug_assert!(
            (left.grad[j] + right.grad[j] - parent.grad[j]).abs() < 1e-6,
            "children stats do not add up to parent"
        );
        gain += score_term(left.grad[j], left.hess[j], lambda)
            + score_term(right.grad[j], right.hess[j], lambda)
            - score_term(parent.grad[j], parent.hess[j], lambda);
    }
    0.5 * gain
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDecision {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Best split for one feature found by a prefix sweep over the node's samples
/// in ascending feature order. Gain is evaluated at every distinct-value
/// boundary; ties keep the smallest threshold.
pub(crate) fn sweep_feature(
    data: &TrainingData,
    gradients: &GradientField,
    in_node: &[bool],
    node_size: usize,
    parent: &NodeStats,
    feature: usize,
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

    let mut iter = data.sorted_orders[feature].iter().filter(|&&i| in_node[i as usize]).peekable();
    while let Some(&i) = iter.next() {
        let i = i as usize;
        let last = data.event_periods[i].min(j_count);
        for j in 0..last {
            let (r, s) = gradients.pair(i, j);
            left_grad[j].add(r);
            left_hess[j].add(s);
        }
        left_count += 1;
        let Some(&&next) = iter.peek() else { break };
        let (cur_v, next_v) = (col[i], col[next as usize]);
        if next_v <= cur_v {
            continue; // not a distinct-value boundary
        }
        if left_count < min_child || node_size - left_count < min_child {
            continue;
        }
        let mut gain = 0.0;
        for j in 0..j_count {
            let (wl, vl) = (left_grad[j].value(), left_hess[j].value());
            let (wr, vr) = (parent.grad[j] - wl, parent.hess[j] - vl);
            gain += score_term(wl, vl, lambda) + score_term(wr, vr, lambda)
                - score_term(parent.grad[j], parent.hess[j], lambda);
        }
        gain *= 0.5;
        if best.map_or(true, |(g, _)| gain > g) {
            best = Some((gain, 0.5 * (cur_v + next_v)));
        }
    }
    best
}

pub(crate) fn decision_from_candidate(
    data: &TrainingData,
    samples: &[usize],
    candidate: Option<(usize, f64, f64)>,
    min_gain: f64,
) -> Option<SplitDecision> {
    let (feature, threshold, gain) = candidate?;
    if gain <= min_gain {
        return None;
    }
    let col = &data.columns[feature];
    let (left, right): (Vec<usize>, Vec<usize>) =
        samples.iter().partition(|&&i| col[i] <= threshold);
    debug_assert!(!left.is_empty() && !right.is_empty());
    Some(SplitDecision { feature, threshold, gain, left, right })
}

/// Pick the best per-feature result: maximum gain, ties broken by lowest
/// feature index then smallest threshold (the per-feature sweeps already
/// keep the smallest threshold).
pub(crate) fn reduce_feature_results(
    results: Vec<Option<(f64, f64)>>,
) -> Option<(usize, f64, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (feature, res) in results.into_iter().enumerate() {
        if let Some((gain, threshold)) = res {
            if best.map_or(true, |(_, _, g)| gain > g) {
                best = Some((feature, threshold, gain));
            }
        }
    }
    best
}

/// Exact greedy split search: every feature, every distinct-value boundary.
pub fn find_best_split_exact(
    data: &TrainingData,
    gradients: &GradientField,
    samples: &[usize],
    in_node: &[bool],
    parent: &NodeStats,
    params: &GrowParams,
) -> Option<SplitDecision> {
    if samples.len() < 2 {
        return None;
    }
    let results: Vec<Option<(f64, f64)>> = (0..data.n_features())
        .into_par_iter()
        .map(|k| {
            sweep_feature(
                data,
                gradients,
                in_node,
                samples.len(),
                parent,
                k,
                params.lambda,
                params.min_child_count,
            )
        })
        .collect();
    decision_from_candidate(data, samples, reduce_feature_results(results), params.min_gain)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
    Leaf { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SurvivalTree {
    pub root: Node,
}

impl SurvivalTree {
    /// Routes `x` to its leaf (`x[feature] <= threshold` goes left) and
    /// returns that leaf's per-period weight vector.
    pub fn predict<'a>(&'a self, x: &[f64]) -> Result<&'a [f64]> {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { weights } => return Ok(weights),
                Node::Split { feature, threshold, left, right } => {
                    let v = *x.get(*feature).ok_or(Error::DimensionMismatch {
                        got: x.len(),
                        expected: *feature + 1,
                    })?;
                    node = if v <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Sum of squared leaf weights over all periods and leaves.
    pub fn weight_norm_sq(&self) -> f64 {
        fn walk(node: &Node, acc: &mut f64) {
            match node {
                Node::Leaf { weights } => *acc += weights.iter().map(|w| w * w).sum::<f64>(),
                Node::Split { left, right, .. } => {
                    walk(left, acc);
                    walk(right, acc);
                }
            }
        }
        let mut acc = 0.0;
        walk(&self.root, &mut acc);
        acc
    }

    pub fn depth(&self) -> usize {
        fn walk(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }
}

/// Depth-first tree growth over the given sample set. A node becomes a leaf
/// when the depth cap is hit, the node is too small to split, or no split
/// beats `min_gain`.
pub fn grow_tree(
    data: &TrainingData,
    gradients: &GradientField,
    samples: &[usize],
    params: &GrowParams,
) -> SurvivalTree {
    let mut in_node = vec![false; data.n_records()];
    SurvivalTree { root: grow_node(data, gradients, samples, &mut in_node, 0, params) }
}

fn grow_node(
    data: &TrainingData,
    gradients: &GradientField,
    samples: &[usize],
    in_node: &mut Vec<bool>,
    depth: usize,
    params: &GrowParams,
) -> Node {
    let stats = NodeStats::compute(data, gradients, samples);
    let too_small = samples.len() < 2 * params.min_child_count.max(1);
    if depth >= params.max_depth || too_small {
        return Node::Leaf { weights: leaf_weight(&stats, params.lambda) };
    }
    for &i in samples {
        in_node[i] = true;
    }
    let decision = match params.split_mode {
        SplitMode::Exact => {
            find_best_split_exact(data, gradients, samples, in_node, &stats, params)
        }
        SplitMode::Quantile { eps } => crate::quantile::find_best_split_quantile(
            data, gradients, samples, in_node, &stats, params, eps,
        ),
    };
    for &i in samples {
        in_node[i] = false;
    }
    match decision {
        None => Node::Leaf { weights: leaf_weight(&stats, params.lambda) },
        Some(split) => Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(grow_node(data, gradients, &split.left, in_node, depth + 1, params)),
            right: Box::new(grow_node(data, gradients, &split.right, in_node, depth + 1, params)),
        },
    }
}
