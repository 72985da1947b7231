//! The GBST training loop: Kaplan-Meier initialization, per-iteration
//! gradient computation, tree fitting with optional stochastic subsampling
//! and shrinkage, margin accumulation, and survival-curve prediction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survival::{
    compute_gradients, hazard_from_margin, kaplan_meier_init, margin_from_hazard, total_loss,
    ObservationGrid, ScoreMatrix, SurvivalDataset,
};
use crate::tree::{grow_tree, GrowParams, SplitMode, SurvivalTree, TrainingData};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoosterParams {
    /// Number of boosting iterations M.
    pub num_trees: usize,
    pub max_depth: usize,
    /// Shrinkage applied to each tree's contribution.
    pub learning_rate: f64,
    pub lambda: f64,
    /// Fraction of records drawn (without replacement) per iteration.
    pub subsample_rate: f64,
    pub split_mode: SplitMode,
    pub min_gain: f64,
    pub min_child_count: usize,
    pub rng_seed: u64,
}

impl Default for BoosterParams {
    fn default() -> Self {
        Self {
            num_trees: 30,
            max_depth: 6,
            learning_rate: 0.1,
            lambda: 0.001,
            subsample_rate: 0.2,
            split_mode: SplitMode::Exact,
            min_gain: 0.0,
            min_child_count: 1,
            rng_seed: 0,
        }
    }
}

impl BoosterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.subsample_rate > 0.0 && self.subsample_rate <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "subsample_rate must be in (0, 1], got {}",
                self.subsample_rate
            )));
        }
        if let SplitMode::Quantile { eps } = self.split_mode {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "quantile eps must be in (0, 1], got {eps}"
                )));
            }
        }
        Ok(())
    }

    fn grow_params(&self) -> GrowParams {
        GrowParams {
            max_depth: self.max_depth,
            lambda: self.lambda,
            min_gain: self.min_gain,
            min_child_count: self.min_child_count,
            split_mode: self.split_mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoosterModel {
    pub format_version: u32,
    pub grid: ObservationGrid,
    /// Clamped Kaplan-Meier per-period hazard, length J.
    pub base_hazards: Vec<f64>,
    pub trees: Vec<SurvivalTree>,
    pub params: BoosterParams,
    pub feature_names: Vec<String>,
    /// Entry 0 is the loss of the Kaplan-Meier baseline; entry m the loss
    /// after the m-th tree, evaluated on the full training set.
    pub training_loss_trace: Vec<f64>,
}

impl BoosterModel {
    pub fn period_count(&self) -> usize {
        self.grid.period_count()
    }

    /// Logit of the baseline hazards, the additive offset of every margin.
    pub fn base_margins(&self) -> Vec<f64> {
        self.base_hazards.iter().map(|&h| margin_from_hazard(h)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: BoosterModel = serde_json::from_str(s)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model format_version {}",
                model.format_version
            )));
        }
        Ok(model)
    }
}

/// `ceil(alpha * n)` distinct indices drawn uniformly without replacement;
/// `alpha = 1` returns all indices in order. The returned set is sorted.
pub fn subsample(n: usize, alpha: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if alpha >= 1.0 {
        return (0..n).collect();
    }
    let k = ((alpha * n as f64).ceil() as usize).clamp(1, n);
    let mut pool: Vec<usize> = (0..n).collect();
    let (picked, _) = pool.partial_shuffle(rng, k);
    let mut out = picked.to_vec();
    out.sort_unstable();
    out
}

/// Trains a GBST model. Risk sets and the loss trace always use the full
/// dataset; subsampling only restricts which records a tree is fitted on.
pub fn fit(dataset: &SurvivalDataset, params: &BoosterParams) -> Result<BoosterModel> {
    params.validate()?;
    let n = dataset.n_records();
    let base_hazard = kaplan_meier_init(dataset);
    let base_margins: Vec<f64> = base_hazard.iter().map(|&h| margin_from_hazard(h)).collect();

    let data = TrainingData::from_dataset(dataset);
    let grow = params.grow_params();
    let mut margins = ScoreMatrix::from_base(n, &base_margins);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut trees = Vec::with_capacity(params.num_trees);
    let mut weight_norm_sq = 0.0;
    let mut trace = Vec::with_capacity(params.num_trees + 1);
    trace.push(total_loss(dataset, &margins, params.lambda, weight_norm_sq));

    let eta = params.learning_rate;
    for _ in 0..params.num_trees {
        let sample = subsample(n, params.subsample_rate, &mut rng);
        let gradients = compute_gradients(dataset, &margins);
        let tree = grow_tree(&data, &gradients, &sample, &grow);
        for i in 0..n {
            let w = tree.predict(&dataset.records[i].features)?;
            for (m, &wj) in margins.row_mut(i).iter_mut().zip(w) {
                *m += eta * wj;
            }
        }
        // the penalty tracks the effective (shrunk) contribution
        weight_norm_sq += eta * eta * tree.weight_norm_sq();
        trace.push(total_loss(dataset, &margins, params.lambda, weight_norm_sq));
        trees.push(tree);
    }

    Ok(BoosterModel {
        format_version: MODEL_FORMAT_VERSION,
        grid: dataset.grid.clone(),
        base_hazards: base_hazard,
        trees,
        params: *params,
        feature_names: dataset.feature_names.clone(),
        training_loss_trace: trace,
    })
}

/// Margins for a feature matrix: base margins plus the shrunk sum of tree
/// predictions.
pub fn predict_margins(model: &BoosterModel, features: &[Vec<f64>]) -> Result<ScoreMatrix> {
    let width = model.feature_names.len();
    let mut margins = ScoreMatrix::from_base(features.len(), &model.base_margins());
    for (i, x) in features.iter().enumerate() {
        if x.len() != width {
            return Err(Error::DimensionMismatch { got: x.len(), expected: width });
        }
        let row = margins.row_mut(i);
        for tree in &model.trees {
            let w = tree.predict(x)?;
            for (m, &wj) in row.iter_mut().zip(w) {
                *m += model.params.learning_rate * wj;
            }
        }
    }
    Ok(margins)
}

/// Per-period hazard and survival curve for one record.
///
/// A record whose trees contribute nothing gets the baseline hazard back
/// bit-for-bit; a logit/sigmoid round trip would perturb the last ulp.
pub fn predict_survival(model: &BoosterModel, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let width = model.feature_names.len();
    if x.len() != width {
        return Err(Error::DimensionMismatch { got: x.len(), expected: width });
    }
    let mut shift = vec![0.0; model.period_count()];
    for tree in &model.trees {
        let w = tree.predict(x)?;
        for (s, &wj) in shift.iter_mut().zip(w) {
            *s += model.params.learning_rate * wj;
        }
    }
    let hazards: Vec<f64> = model
        .base_hazards
        .iter()
        .zip(&shift)
        .map(|(&h0, &s)| {
            if s == 0.0 {
                h0
            } else {
                hazard_from_margin(margin_from_hazard(h0) + s)
            }
        })
        .collect();
    let mut survival = Vec::with_capacity(hazards.len());
    let mut prod = 1.0;
    for &h in &hazards {
        prod *= 1.0 - h;
        survival.push(prod);
    }
    Ok((hazards, survival))
}
