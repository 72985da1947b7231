//! Shared fixtures for the criterion benches.

use gbst_core::survival::{compute_gradients, GradientField, ScoreMatrix, SurvivalDataset};
use gbst_core::synthetic::{self, SyntheticConfig};
use gbst_core::tree::TrainingData;

pub fn bench_dataset(n_records: usize, n_features: usize, period_count: usize) -> SurvivalDataset {
    synthetic::generate(&SyntheticConfig {
        n_records,
        n_features,
        period_count,
        seed: 77,
        ..Default::default()
    })
}

/// Dataset plus the precomputed state a single split search starts from.
pub struct SplitFixture {
    pub data: TrainingData,
    pub gradients: GradientField,
    pub samples: Vec<usize>,
    pub in_node: Vec<bool>,
}

pub fn split_fixture(n_records: usize, n_features: usize, period_count: usize) -> SplitFixture {
    let ds = bench_dataset(n_records, n_features, period_count);
    let data = TrainingData::from_dataset(&ds);
    let margins = ScoreMatrix::filled(n_records, period_count, -2.0);
    let gradients = compute_gradients(&ds, &margins);
    SplitFixture {
        data,
        gradients,
        samples: (0..n_records).collect(),
        in_node: vec![true; n_records],
    }
}
