//! Discrete-time survival machinery.
//!
//! Observation grid and period mapping, censoring labels, risk sets,
//! hazard/survival conversions, Kaplan-Meier initialization, the boosting
//! loss and its first/second derivatives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hazards are clamped into `[HAZARD_FLOOR, 1 - HAZARD_FLOOR]` before any
/// log or product so that degenerate margins cannot produce infinities.
pub const HAZARD_FLOOR: f64 = 1e-7;

/// Compensated (Kahan) accumulator. Summation order is fixed by the caller,
/// which keeps reductions bit-identical across thread counts.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// A finite set of observation boundaries `0 < tau_1 < ... < tau_J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationGrid {
    boundaries: Vec<f64>,
}

impl ObservationGrid {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::InvalidGrid("at least one boundary required".into()));
        }
        let mut prev = 0.0;
        for &b in &boundaries {
            if !b.is_finite() || b <= prev {
                return Err(Error::InvalidGrid(format!(
                    "boundaries must be finite, positive and strictly increasing (got {b} after {prev})"
                )));
            }
            prev = b;
        }
        Ok(Self { boundaries })
    }

    /// Grid with `period_count` periods of equal length `step`.
    pub fn uniform(period_count: usize, step: f64) -> Result<Self> {
        if period_count == 0 {
            return Err(Error::InvalidGrid("period_count must be >= 1".into()));
        }
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        Self::new((1..=period_count).map(|j| j as f64 * step).collect())
    }

    pub fn period_count(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Maps a time `t > 0` to its period: `j` such that `tau_{j-1} < t <= tau_j`
    /// (intervals right-closed), or `J + 1` when `t > tau_J`.
    pub fn map_to_period(&self, t: f64) -> Result<usize> {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::InvalidTime(t));
        }
        match self.boundaries.iter().position(|&b| t <= b) {
            Some(idx) => Ok(idx + 1),
            None => Ok(self.period_count() + 1),
        }
    }
}

/// One observation: features, the period its event/censoring time falls in,
/// and whether the event was observed (`true`) or the record censored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub features: Vec<f64>,
    /// `J(t)` of the observed time: in `1..=J+1`, `J+1` meaning beyond `tau_J`.
    pub event_period: usize,
    pub event_observed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalDataset {
    pub grid: ObservationGrid,
    pub records: Vec<SurvivalRecord>,
    pub feature_names: Vec<String>,
}

impl SurvivalDataset {
    pub fn new(
        grid: ObservationGrid,
        records: Vec<SurvivalRecord>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = feature_names.len();
        let j_max = grid.period_count() + 1;
        for rec in &records {
            if rec.features.len() != n {
                return Err(Error::DimensionMismatch { got: rec.features.len(), expected: n });
            }
            if rec.event_period < 1 || rec.event_period > j_max {
                return Err(Error::PeriodOutOfRange { period: rec.event_period, max: j_max });
            }
        }
        Ok(Self { grid, records, feature_names })
    }

    pub fn n_records(&self) -> usize {
        self.records.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Last period (capped at J) in which record `i` contributes to the loss.
    pub fn last_period(&self, i: usize) -> usize {
        self.records[i].event_period.min(self.grid.period_count())
    }
}

/// Risk sets `N_j = { i : J(t_i) >= j }` for `j = 1..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskSets {
    sets: Vec<Vec<usize>>,
}

impl RiskSets {
    /// Members of `N_j` (1-based period), ascending record index.
    pub fn members(&self, j: usize) -> &[usize] {
        &self.sets[j - 1]
    }

    pub fn period_count(&self) -> usize {
        self.sets.len()
    }
}

pub fn build_risk_sets(dataset: &SurvivalDataset) -> RiskSets {
    let j_count = dataset.grid.period_count();
    let mut sets = Vec::with_capacity(j_count);
    for j in 1..=j_count {
        sets.push(
            (0..dataset.n_records())
                .filter(|&i| dataset.records[i].event_period >= j)
                .collect(),
        );
    }
    RiskSets { sets }
}

/// The label `y_j(t)` of a record at period `j`: `+1` once the observed event
/// time has been reached (`delta = 1` and `t <= tau_j`), `-1` otherwise.
///
/// Contract: `1 <= j <= min(event_period, J)`; panics outside that range.
pub fn censor_label(j: usize, record: &SurvivalRecord) -> i8 {
    assert!(j >= 1 && j <= record.event_period, "period {j} outside contribution range");
    if record.event_observed && j >= record.event_period {
        1
    } else {
        -1
    }
}

pub fn clamp_hazard(h: f64) -> f64 {
    h.clamp(HAZARD_FLOOR, 1.0 - HAZARD_FLOOR)
}

/// Sigmoid of the margin, clamped away from {0, 1}.
pub fn hazard_from_margin(f: f64) -> f64 {
    clamp_hazard(1.0 / (1.0 + (-f).exp()))
}

/// `S(tau_j) = prod_{l<=j} (1 - h_l)` for every `j`.
pub fn survival_curve(hazards: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(hazards.len());
    let mut prod = 1.0;
    for &h in hazards {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::HazardOutOfRange(h));
        }
        prod *= 1.0 - h;
        out.push(prod);
    }
    Ok(out)
}

/// Probability of the event falling in `(tau_{j-1}, tau_j]`:
/// `h_j * prod_{l<j} (1 - h_l)`.
pub fn event_probability(hazards: &[f64], j: usize) -> Result<f64> {
    if j < 1 || j > hazards.len() {
        return Err(Error::PeriodOutOfRange { period: j, max: hazards.len() });
    }
    let mut prod = 1.0;
    for &h in &hazards[..j - 1] {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::HazardOutOfRange(h));
        }
        prod *= 1.0 - h;
    }
    let h = hazards[j - 1];
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::HazardOutOfRange(h));
    }
    Ok(h * prod)
}

/// Kaplan-Meier per-period hazard `h_j = d_j / n_j`, where `d_j` counts
/// observed events in period `j` and `n_j = |N_j|`. Periods with `n_j = 0`
/// fall back to the clamp floor.
pub fn kaplan_meier_init(dataset: &SurvivalDataset) -> Vec<f64> {
    let j_count = dataset.grid.period_count();
    let mut events = vec![0usize; j_count];
    let mut at_risk = vec![0usize; j_count];
    for rec in &dataset.records {
        if rec.event_observed && rec.event_period <= j_count {
            events[rec.event_period - 1] += 1;
        }
        for j in 0..rec.event_period.min(j_count) {
            at_risk[j] += 1;
        }
    }
    (0..j_count)
        .map(|j| {
            if at_risk[j] == 0 {
                HAZARD_FLOOR
            } else {
                clamp_hazard(events[j] as f64 / at_risk[j] as f64)
            }
        })
        .collect()
}

/// First and second derivative of `log(1 + exp(-y f))` with respect to `f`.
///
/// With `h = sigmoid(f)`: `r = -(1 - h)` when `y = +1`, `r = h` when `y = -1`;
/// `sigma = h (1 - h)` in both cases.
pub fn gradient_hessian(y: i8, f: f64) -> (f64, f64) {
    let h = hazard_from_margin(f);
    let r = if y > 0 { -(1.0 - h) } else { h };
    (r, h * (1.0 - h))
}

/// Additive margins `f(tau_j; x_i)`, one value per record per period,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    periods: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn filled(rows: usize, periods: usize, value: f64) -> Self {
        Self { rows, periods, data: vec![value; rows * periods] }
    }

    /// One row per record, each initialized to `base` (length `periods`).
    pub fn from_base(rows: usize, base: &[f64]) -> Self {
        let mut data = Vec::with_capacity(rows * base.len());
        for _ in 0..rows {
            data.extend_from_slice(base);
        }
        Self { rows, periods: base.len(), data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.periods..(i + 1) * self.periods]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.periods..(i + 1) * self.periods]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.periods + j]
    }
}

/// Per-record per-period first (`r`) and second (`sigma`) derivatives.
/// Entries outside a record's risk-set range are zero and never read.
#[derive(Debug, Clone)]
pub struct GradientField {
    rows: usize,
    periods: usize,
    pub r: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl GradientField {
    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `(r, sigma)` for record `i` at 0-based period index `j`.
    pub fn pair(&self, i: usize, j: usize) -> (f64, f64) {
        let idx = i * self.periods + j;
        (self.r[idx], self.sigma[idx])
    }
}

/// Derivatives at the current margins for every record and every period in
/// its contribution range. Rows are independent, so the parallel evaluation
/// is bit-identical to the sequential one.
pub fn compute_gradients(dataset: &SurvivalDataset, margins: &ScoreMatrix) -> GradientField {
    let j_count = dataset.grid.period_count();
    let n = dataset.n_records();
    let mut r = vec![0.0; n * j_count];
    let mut sigma = vec![0.0; n * j_count];
    r.par_chunks_mut(j_count)
        .zip(sigma.par_chunks_mut(j_count))
        .enumerate()
        .for_each(|(i, (r_row, s_row))| {
            let rec = &dataset.records[i];
            let f_row = margins.row(i);
            for j in 1..=rec.event_period.min(j_count) {
                let y = censor_label(j, rec);
                let (ri, si) = gradient_hessian(y, f_row[j - 1]);
                r_row[j - 1] = ri;
                s_row[j - 1] = si;
            }
        });
    GradientField { rows: n, periods: j_count, r, sigma }
}

/// Regularized negative log-likelihood: the log-loss summed per period over
/// the risk set, plus `lambda / 2` times the supplied squared weight norm.
/// Accumulation is period-major in record index order with compensated sums.
pub fn total_loss(
    dataset: &SurvivalDataset,
    margins: &ScoreMatrix,
    lambda: f64,
    weight_norm_sq: f64,
) -> f64 {
    let j_count = dataset.grid.period_count();
    let mut acc = KahanSum::default();
    for j in 1..=j_count {
        for (i, rec) in dataset.records.iter().enumerate() {
            if rec.event_period < j {
                continue;
            }
            let y = censor_label(j, rec) as f64;
            let z = -y * margins.get(i, j - 1);
            // log(1 + exp(z)) without overflow for large |z|
            let term = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            acc.add(term);
        }
    }
    acc.value() + 0.5 * lambda * weight_norm_sq
}

/// Logit of a clamped hazard.
pub fn margin_from_hazard(h: f64) -> f64 {
    let h = clamp_hazard(h);
    (h / (1.0 - h)).ln()
}
