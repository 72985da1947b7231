//! Gradient-boosted survival trees over discrete-time hazards.
//!
//! The model learns per-period hazard margins for right-censored tabular
//! data by second-order boosting of a discrete-time negative log-likelihood.
//! Trees carry one weight per observation period in each leaf, so a single
//! tree adjusts the full hazard trajectory of the records it routes.
//!
//! Modules:
//! - [`survival`]: grids, labels, risk sets, hazard/survival identities,
//!   Kaplan-Meier initialization, loss and derivatives
//! - [`tree`]: survival-tree structure, leaf weights, exact greedy splits
//! - [`quantile`]: weighted-quantile split candidates and approximate splits
//! - [`booster`]: the training loop, prediction, model serialization
//! - [`metrics`]: C-index, per-period AUC/KS, decile default-rate analysis
//! - [`dataio`]: CSV ingestion and the preprocessing plan
//! - [`synthetic`]: seeded synthetic censored datasets for tests and benches

pub mod booster;
pub mod dataio;
pub mod error;
pub mod metrics;
pub mod quantile;
pub mod survival;
pub mod synthetic;
pub mod tree;

pub use booster::{fit, predict_margins, predict_survival, BoosterModel, BoosterParams};
pub use error::{Error, Result};
pub use metrics::{evaluate_model, EvaluationReport, RiskReduction};
pub use survival::{ObservationGrid, SurvivalDataset, SurvivalRecord};
pub use tree::{SplitMode, SurvivalTree};
