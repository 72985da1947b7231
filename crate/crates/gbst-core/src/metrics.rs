//! Evaluation suite: Harrell's C-index for censored data, per-period AUC and
//! KS restricted to the at-risk cohort, cumulative default rates, and the
//! decile survival-group analysis.

use serde::{Deserialize, Serialize};

use crate::booster::{predict_survival, BoosterModel};
use crate::error::{Error, Result};
use crate::survival::SurvivalDataset;

/// How a predicted survival curve is reduced to a scalar risk score
/// (higher = riskier).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskReduction {
    /// Negated sum of per-period survival probabilities (negated expected
    /// number of survived periods).
    NegExpectedSurvival,
    /// Negated survival probability at a fixed horizon period (1-based).
    SurvivalAtPeriod(usize),
}

impl RiskReduction {
    pub fn score(&self, survival: &[f64]) -> f64 {
        match *self {
            RiskReduction::NegExpectedSurvival => -survival.iter().sum::<f64>(),
            RiskReduction::SurvivalAtPeriod(j) => -survival[j - 1],
        }
    }
}

/// Harrell's C-index. A pair `(i, k)` is comparable iff record `i` has an
/// observed event strictly before `k`'s event or censoring period; pairs
/// tied on period are not comparable. Score ties count 1/2. Returns 0.5
/// when no pair is comparable.
pub fn concordance_index(scores: &[f64], dataset: &SurvivalDataset) -> Result<f64> {
    let n = dataset.n_records();
    if scores.len() != n {
        return Err(Error::DimensionMismatch { got: scores.len(), expected: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| dataset.records[i].event_period);
    let mut comparable = 0u64;
    let mut concordant = 0.0f64;
    for (pos, &i) in order.iter().enumerate() {
        let rec_i = &dataset.records[i];
        if !rec_i.event_observed {
            continue;
        }
        // everything strictly later in period order is a comparable partner
        for &k in order[pos + 1..].iter() {
            if dataset.records[k].event_period == rec_i.event_period {
                continue;
            }
            comparable += 1;
            if scores[i] > scores[k] {
                concordant += 1.0;
            } else if scores[i] == scores[k] {
                concordant += 0.5;
            }
        }
    }
    if comparable == 0 {
        return Ok(0.5);
    }
    Ok(concordant / comparable as f64)
}

/// Period-`j` cohort labels: records at risk in `j` with known period-`j`
/// status. `Some(true)` = event in period `j`, `Some(false)` = survived it;
/// records censored in period `j` are excluded.
fn period_cohort(dataset: &SurvivalDataset, j: usize) -> Vec<(usize, bool)> {
    dataset
        .records
        .iter()
        .enumerate()
        .filter_map(|(i, rec)| {
            if rec.event_period > j {
                Some((i, false))
            } else if rec.event_period == j && rec.event_observed {
                Some((i, true))
            } else {
                None
            }
        })
        .collect()
}

/// Rank-based (Mann-Whitney) AUC of `scores` against the period-`j` outcome.
/// `None` when either class is empty.
pub fn period_auc(scores: &[f64], dataset: &SurvivalDataset, j: usize) -> Option<f64> {
    let cohort = period_cohort(dataset, j);
    let n_pos = cohort.iter().filter(|&&(_, y)| y).count();
    let n_neg = cohort.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut items: Vec<(f64, bool)> = cohort.iter().map(|&(i, y)| (scores[i], y)).collect();
    items.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // tie-averaged ranks
    let mut rank_sum_pos = 0.0f64;
    let mut start = 0;
    while start < items.len() {
        let mut end = start + 1;
        while end < items.len() && items[end].0 == items[start].0 {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        for item in &items[start..end] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        start = end;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Kolmogorov-Smirnov statistic on the same cohort as [`period_auc`]:
/// the maximum of `|TPR - FPR|` over score thresholds.
pub fn period_ks(scores: &[f64], dataset: &SurvivalDataset, j: usize) -> Option<f64> {
    let cohort = period_cohort(dataset, j);
    let n_pos = cohort.iter().filter(|&&(_, y)| y).count();
    let n_neg = cohort.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut items: Vec<(f64, bool)> = cohort.iter().map(|&(i, y)| (scores[i], y)).collect();
    // descending: high scores flagged positive first
    items.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut ks = 0.0f64;
    let mut idx = 0;
    while idx < items.len() {
        let mut end = idx + 1;
        while end < items.len() && items[end].0 == items[idx].0 {
            end += 1;
        }
        for item in &items[idx..end] {
            if item.1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let gap = (tp as f64 / n_pos as f64 - fp as f64 / n_neg as f64).abs();
        ks = ks.max(gap);
        idx = end;
    }
    Some(ks)
}

/// Cumulative default rate of a record subset up to period `j`.
pub fn default_rate(dataset: &SurvivalDataset, subset: &[usize], j: usize) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::Data("default_rate over empty subset".into()));
    }
    let defaults = subset
        .iter()
        .filter(|&&i| {
            let rec = &dataset.records[i];
            rec.event_observed && rec.event_period <= j
        })
        .count();
    Ok(defaults as f64 / subset.len() as f64)
}

/// Sorts records ascending by predicted `S(tau_j)`, splits them into 10
/// contiguous groups (remainder spread over the first groups) and returns
/// each group's observed default rate up to period `j`. Group 1 holds the
/// lowest predicted survival.
pub fn decile_analysis(
    survival_at_j: &[f64],
    dataset: &SurvivalDataset,
    j: usize,
) -> Result<Vec<f64>> {
    let n = dataset.n_records();
    if survival_at_j.len() != n {
        return Err(Error::DimensionMismatch { got: survival_at_j.len(), expected: n });
    }
    if n < 10 {
        return Err(Error::Data(format!("decile analysis needs >= 10 records, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| survival_at_j[a].partial_cmp(&survival_at_j[b]).unwrap());
    let base = n / 10;
    let remainder = n % 10;
    let mut rates = Vec::with_capacity(10);
    let mut start = 0;
    for g in 0..10 {
        let size = base + usize::from(g < remainder);
        let group = &order[start..start + size];
        rates.push(default_rate(dataset, group, j)?);
        start += size;
    }
    Ok(rates)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodMetrics {
    pub period: usize,
    pub auc: Option<f64>,
    pub ks: Option<f64>,
    pub at_risk_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileTable {
    pub period: usize,
    /// Observed default rate per survival group, group 1 first.
    pub default_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub c_index: f64,
    pub periods: Vec<PeriodMetrics>,
    pub deciles: Vec<DecileTable>,
}

impl EvaluationReport {
    /// Flat per-period CSV (6 decimal places, absent metrics left empty).
    pub fn period_csv(&self) -> String {
        let mut out = String::from("period,auc,ks,at_risk_count\n");
        for p in &self.periods {
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.period,
                fmt(p.auc),
                fmt(p.ks),
                p.at_risk_count
            ));
        }
        out
    }

    /// Decile default-rate CSV, one row per (period, group).
    pub fn decile_csv(&self) -> String {
        let mut out = String::from("period,group,default_rate\n");
        for table in &self.deciles {
            for (g, rate) in table.default_rates.iter().enumerate() {
                out.push_str(&format!("{},{},{rate:.6}\n", table.period, g + 1));
            }
        }
        out
    }
}

/// Runs the full evaluation of a model against a labeled dataset.
pub fn evaluate_model(
    model: &BoosterModel,
    dataset: &SurvivalDataset,
    reduction: RiskReduction,
    decile_periods: &[usize],
) -> Result<EvaluationReport> {
    let j_count = model.period_count();
    let mut survival_rows = Vec::with_capacity(dataset.n_records());
    for rec in &dataset.records {
        let (_, s) = predict_survival(model, &rec.features)?;
        survival_rows.push(s);
    }
    let scores: Vec<f64> = survival_rows.iter().map(|s| reduction.score(s)).collect();
    let c_index = concordance_index(&scores, dataset)?;
    let periods = (1..=j_count)
        .map(|j| {
            let at_risk_count =
                dataset.records.iter().filter(|r| r.event_period >= j).count();
            PeriodMetrics {
                period: j,
                auc: period_auc(&scores, dataset, j),
                ks: period_ks(&scores, dataset, j),
                at_risk_count,
            }
        })
        .collect();
    let mut deciles = Vec::with_capacity(decile_periods.len());
    for &j in decile_periods {
        if j < 1 || j > j_count {
            return Err(Error::PeriodOutOfRange { period: j, max: j_count });
        }
        let survival_at_j: Vec<f64> = survival_rows.iter().map(|s| s[j - 1]).collect();
        deciles.push(DecileTable { period: j, default_rates: decile_analysis(&survival_at_j, dataset, j)? });
    }
    Ok(EvaluationReport { c_index, periods, deciles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survival::{ObservationGrid, SurvivalRecord};

    fn dataset(j_count: usize, recs: Vec<(bool, usize)>) -> SurvivalDataset {
        let grid = ObservationGrid::uniform(j_count, 1.0).unwrap();
        let records = recs
            .into_iter()
            .map(|(delta, period)| SurvivalRecord {
                features: vec![0.0],
                event_period: period,
                event_observed: delta,
            })
            .collect();
        SurvivalDataset::new(grid, records, vec!["x0".into()]).unwrap()
    }

    /// Naive double loop over the comparable-pair predicate.
    fn c_index_oracle(scores: &[f64], ds: &SurvivalDataset) -> f64 {
        let n = ds.n_records();
        let mut comparable = 0u64;
        let mut concordant = 0.0;
        for i in 0..n {
            for k in 0..n {
                if i == k {
                    continue;
                }
                let ri = &ds.records[i];
                let rk = &ds.records[k];
                if !(ri.event_observed && ri.event_period < rk.event_period) {
                    continue;
                }
                comparable += 1;
                if scores[i] > scores[k] {
                    concordant += 1.0;
                } else if scores[i] == scores[k] {
                    concordant += 0.5;
                }
            }
        }
        if comparable == 0 {
            0.5
        } else {
            concordant / comparable as f64
        }
    }

    #[test]
    fn c_index_perfect_and_reversed() {
        let ds = dataset(4, vec![(true, 1), (true, 2), (true, 3), (true, 4)]);
        let scores = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(concordance_index(&scores, &ds).unwrap(), 1.0);
        let reversed = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(concordance_index(&reversed, &ds).unwrap(), 0.0);
    }

    #[test]
    fn c_index_hand_case_with_censoring() {
        let ds = dataset(4, vec![(true, 1), (false, 2), (true, 3), (false, 4)]);
        let scores = [5.0, 1.0, 2.0, 3.0];
        let got = concordance_index(&scores, &ds).unwrap();
        assert_eq!(got, c_index_oracle(&scores, &ds));
        // pairs: (0,1),(0,2),(0,3) concordant, concordant, concordant is
        // (5>1, 5>2, 5>3); (2,3): 2<3 discordant -> 3/4
        assert!((got - 0.75).abs() < 1e-15);
    }

    #[test]
    fn c_index_no_comparable_pairs() {
        let ds = dataset(2, vec![(false, 3), (false, 3)]);
        assert_eq!(concordance_index(&[1.0, 2.0], &ds).unwrap(), 0.5);
    }

    #[test]
    fn c_index_matches_oracle_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let n = rng.gen_range(2..60);
            let ds = dataset(
                5,
                (0..n).map(|_| (rng.gen_bool(0.6), rng.gen_range(1..=6))).collect(),
            );
            let scores: Vec<f64> =
                (0..n).map(|_| (rng.gen_range(-10i32..10) as f64) / 2.0).collect();
            let got = concordance_index(&scores, &ds).unwrap();
            assert_eq!(got, c_index_oracle(&scores, &ds));
        }
    }

    #[test]
    fn auc_separated_and_hand_case() {
        // period 2 cohort: events at 2 vs survivors past 2
        let ds = dataset(3, vec![(true, 2), (true, 2), (false, 3), (false, 4), (true, 3), (false, 2)]);
        // censored-at-2 record (index 5) is excluded
        let scores = [0.9, 0.8, 0.1, 0.2, 0.3, 100.0];
        assert_eq!(period_auc(&scores, &ds, 2).unwrap(), 1.0);
        // hand case: positives {0.9, 0.3}, negatives {0.5, 0.2}
        let ds2 = dataset(2, vec![(true, 1), (true, 1), (false, 2), (false, 2)]);
        let scores2 = [0.9, 0.3, 0.5, 0.2];
        // pairs: (0.9>0.5),(0.9>0.2),(0.3<0.5),(0.3>0.2) -> 3/4
        assert!((period_auc(&scores2, &ds2, 1).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn auc_degenerate_class_absent() {
        let ds = dataset(2, vec![(false, 3), (false, 3)]);
        assert_eq!(period_auc(&[0.1, 0.2], &ds, 1), None);
    }

    #[test]
    fn ks_extremes_and_hand_case() {
        let ds = dataset(2, vec![(true, 1), (true, 1), (false, 2), (false, 2)]);
        assert_eq!(period_ks(&[1.0, 0.9, 0.1, 0.0], &ds, 1).unwrap(), 1.0);
        assert_eq!(period_ks(&[0.5, 0.5, 0.5, 0.5], &ds, 1).unwrap(), 0.0);
        // CDF sweep by hand: scores pos {0.9, 0.3}, neg {0.5, 0.2}
        // thresholds desc: 0.9 -> |0.5-0|, 0.5 -> |0.5-0.5|, 0.3 -> |1-0.5|, 0.2 -> 0
        let ks = period_ks(&[0.9, 0.3, 0.5, 0.2], &ds, 1).unwrap();
        assert!((ks - 0.5).abs() < 1e-15);
    }

    #[test]
    fn default_rate_cumulative() {
        let ds = dataset(
            3,
            vec![
                (true, 1),
                (true, 2),
                (false, 2),
                (false, 4),
                (true, 3),
                (false, 4),
                (false, 4),
                (false, 4),
                (false, 4),
                (false, 4),
            ],
        );
        let all: Vec<usize> = (0..10).collect();
        assert!((default_rate(&ds, &all, 1).unwrap() - 0.1).abs() < 1e-15);
        assert!((default_rate(&ds, &all, 2).unwrap() - 0.2).abs() < 1e-15);
        assert!((default_rate(&ds, &all, 3).unwrap() - 0.3).abs() < 1e-15);
        let mut prev = 0.0;
        for j in 1..=3 {
            let r = default_rate(&ds, &all, j).unwrap();
            assert!(r >= prev);
            prev = r;
        }
        assert!(default_rate(&ds, &[], 1).is_err());
    }

    #[test]
    fn decile_groups_equal_sizes_and_counting() {
        // 23 records: first 3 groups get 3, the rest 2
        let recs: Vec<(bool, usize)> =
            (0..23).map(|i| (i % 2 == 0, if i % 2 == 0 { 1 } else { 3 })).collect();
        let ds = dataset(2, recs);
        // survival anti-correlated with events: events get low survival
        let surv: Vec<f64> = ds
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| if r.event_observed { 0.1 + i as f64 * 1e-3 } else { 0.9 + i as f64 * 1e-3 })
            .collect();
        let rates = decile_analysis(&surv, &ds, 2).unwrap();
        assert_eq!(rates.len(), 10);
        for w in rates.windows(2) {
            assert!(w[0] >= w[1]);
        }
        // direct per-group counting on the sorted order
        let mut order: Vec<usize> = (0..23).collect();
        order.sort_by(|&a, &b| surv[a].partial_cmp(&surv[b]).unwrap());
        let mut start = 0;
        for (g, &rate) in rates.iter().enumerate() {
            let size = 2 + usize::from(g < 3);
            let group = &order[start..start + size];
            assert_eq!(rate, default_rate(&ds, group, 2).unwrap());
            start += size;
        }
    }

    #[test]
    fn decile_requires_ten_records() {
        let ds = dataset(1, vec![(true, 1); 9]);
        assert!(decile_analysis(&vec![0.5; 9], &ds, 1).is_err());
    }

    #[test]
    fn monotone_transform_invariance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let n = 50;
        let ds = dataset(
            4,
            (0..n).map(|_| (rng.gen_bool(0.5), rng.gen_range(1..=5))).collect(),
        );
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let transformed: Vec<f64> = scores.iter().map(|&s| (0.7 * s).exp() + 5.0).collect();
        assert_eq!(
            concordance_index(&scores, &ds).unwrap(),
            concordance_index(&transformed, &ds).unwrap()
        );
        for j in 1..=4 {
            assert_eq!(period_auc(&scores, &ds, j), period_auc(&transformed, &ds, j));
            assert_eq!(period_ks(&scores, &ds, j), period_ks(&transformed, &ds, j));
        }
    }

    #[test]
    fn complement_symmetry_without_ties() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(34);
        let n = 40;
        let ds = dataset(
            4,
            (0..n).map(|_| (rng.gen_bool(0.5), rng.gen_range(1..=5))).collect(),
        );
        let scores: Vec<f64> = (0..n).map(|i| i as f64 + rng.gen_range(0.0..0.5)).collect();
        let negated: Vec<f64> = scores.iter().map(|&s| -s).collect();
        let c = concordance_index(&scores, &ds).unwrap();
        let cn = concordance_index(&negated, &ds).unwrap();
        assert!((c + cn - 1.0).abs() < 1e-12);
        for j in 1..=4 {
            if let (Some(a), Some(an)) =
                (period_auc(&scores, &ds, j), period_auc(&negated, &ds, j))
            {
                assert!((a + an - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn at_risk_counts_non_increasing() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(35);
        let ds = dataset(
            5,
            (0..30).map(|_| (rng.gen_bool(0.5), rng.gen_range(1..=6))).collect(),
        );
        let counts: Vec<usize> = (1..=5)
            .map(|j| ds.records.iter().filter(|r| r.event_period >= j).count())
            .collect();
        for w in counts.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}
