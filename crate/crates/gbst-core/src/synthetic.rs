//! Seeded synthetic censored datasets with a hazard logit linear in the
//! leading features. Used by the test suites, the CLI fixtures and benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::survival::{margin_from_hazard, ObservationGrid, SurvivalDataset, SurvivalRecord};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub n_records: usize,
    pub n_features: usize,
    pub period_count: usize,
    /// Intercept of the per-period hazard logit.
    pub base_margin: f64,
    /// Linear coefficients on the leading features.
    pub coefficients: Vec<f64>,
    /// Probability that a record is independently right-censored.
    pub censor_prob: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_records: 2000,
            n_features: 10,
            period_count: 12,
            base_margin: -3.5,
            coefficients: vec![3.0, 2.5, -2.0],
            censor_prob: 0.2,
            seed: 42,
        }
    }
}

/// Draws features uniformly in [-2, 2], simulates the event period from the
/// per-period hazard, then applies independent random censoring.
pub fn generate(config: &SyntheticConfig) -> SurvivalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let grid = ObservationGrid::uniform(config.period_count, 1.0).unwrap();
    let j_count = config.period_count;
    let mut records = Vec::with_capacity(config.n_records);
    for _ in 0..config.n_records {
        let features: Vec<f64> =
            (0..config.n_features).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let margin = config.base_margin
            + config
                .coefficients
                .iter()
                .zip(&features)
                .map(|(c, x)| c * x)
                .sum::<f64>();
        let hazard = 1.0 / (1.0 + (-margin).exp());
        let mut event_period = j_count + 1;
        let mut event_observed = false;
        for j in 1..=j_count {
            if rng.gen_bool(hazard) {
                event_period = j;
                event_observed = true;
                break;
            }
        }
        if rng.gen_bool(config.censor_prob) {
            let censor_period = rng.gen_range(1..=j_count);
            if censor_period < event_period {
                event_period = censor_period;
                event_observed = false;
            }
        }
        records.push(SurvivalRecord { features, event_period, event_observed });
    }
    let names = (0..config.n_features).map(|k| format!("x{k}")).collect();
    SurvivalDataset::new(grid, records, names).unwrap()
}

/// The per-record risk implied by the generator itself (the true hazard
/// logit); useful as an upper-bound reference for discrimination tests.
pub fn true_margin(config: &SyntheticConfig, features: &[f64]) -> f64 {
    config.base_margin
        + config.coefficients.iter().zip(features).map(|(c, x)| c * x).sum::<f64>()
}

/// Renders a dataset as a labeled CSV (features, time, event) with times
/// placed mid-period and survivors one unit past the horizon.
pub fn to_csv(dataset: &SurvivalDataset) -> String {
    let j_count = dataset.grid.period_count();
    let mut out = String::new();
    for name in &dataset.feature_names {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("time,event\n");
    for rec in &dataset.records {
        for v in &rec.features {
            out.push_str(&format!("{v}"));
            out.push(',');
        }
        let time = if rec.event_period > j_count {
            j_count as f64 + 1.0
        } else {
            rec.event_period as f64 - 0.5
        };
        out.push_str(&format!("{time},{}\n", u8::from(rec.event_observed)));
    }
    out
}

/// The margin matrix of the generating process, handy for seeding tests with
/// realistic gradients.
pub fn true_base_margins(config: &SyntheticConfig) -> Vec<f64> {
    let hazard = 1.0 / (1.0 + (-config.base_margin).exp());
    vec![margin_from_hazard(hazard); config.period_count]
}
