//! CSV ingestion and preprocessing: missing-rate filtering, one-hot encoding
//! of categoricals, sentinel filling with missing-value indicator columns,
//! and binding of time/event labels onto an observation grid.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::survival::{ObservationGrid, SurvivalDataset, SurvivalRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    TimeLabel,
    EventLabel,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
}

/// Column kinds for a table: declared entries win, everything else is
/// inferred (numeric when every non-missing cell parses as a number).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSchema>,
}

impl Schema {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Declared time/event columns by explicit label names.
    pub fn with_labels(time_column: &str, event_column: &str) -> Self {
        Schema {
            columns: vec![
                ColumnSchema { name: time_column.into(), kind: ColumnKind::TimeLabel },
                ColumnSchema { name: event_column.into(), kind: ColumnKind::EventLabel },
            ],
        }
    }
}

/// A loaded CSV: header names plus column-major cells, `None` for empty
/// cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<Option<String>>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }

    pub fn column(&self, name: &str) -> Result<&[Option<String>]> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("column '{name}' not found")))?;
        Ok(&self.columns[idx])
    }
}

/// Reads an RFC-4180 CSV with a header row. Ragged rows are an error.
pub fn load_table(path: &Path) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut columns: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record?;
        for (k, cell) in record.iter().enumerate() {
            columns[k].push(if cell.is_empty() { None } else { Some(cell.to_owned()) });
        }
    }
    if columns.first().map_or(true, |c| c.is_empty()) {
        return Err(Error::Data("table has no data rows".into()));
    }
    Ok(RawTable { headers, columns })
}

/// Kind of every column: declared kinds validated against the table,
/// undeclared ones inferred.
pub fn resolve_kinds(table: &RawTable, schema: &Schema) -> Result<Vec<(String, ColumnKind)>> {
    let declared: HashMap<&str, ColumnKind> =
        schema.columns.iter().map(|c| (c.name.as_str(), c.kind)).collect();
    for c in &schema.columns {
        if !table.headers.iter().any(|h| h == &c.name) {
            return Err(Error::Data(format!("declared column '{}' absent from table", c.name)));
        }
    }
    let mut time_count = 0;
    let mut event_count = 0;
    let resolved: Vec<(String, ColumnKind)> = table
        .headers
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let kind = declared.copied_or_infer(name, &table.columns[k]);
            match kind {
                ColumnKind::TimeLabel => time_count += 1,
                ColumnKind::EventLabel => event_count += 1,
                _ => {}
            }
            (name.clone(), kind)
        })
        .collect();
    if time_count != 1 || event_count != 1 {
        return Err(Error::Data(format!(
            "exactly one time-label and one event-label column required (got {time_count}/{event_count})"
        )));
    }
    Ok(resolved)
}

trait KindLookup {
    fn copied_or_infer(&self, name: &str, cells: &[Option<String>]) -> ColumnKind;
}

impl KindLookup for HashMap<&str, ColumnKind> {
    fn copied_or_infer(&self, name: &str, cells: &[Option<String>]) -> ColumnKind {
        if let Some(&kind) = self.get(name) {
            return kind;
        }
        let numeric = cells
            .iter()
            .flatten()
            .all(|cell| cell.parse::<f64>().map_or(false, |v| v.is_finite()));
        if numeric {
            ColumnKind::Numeric
        } else {
            ColumnKind::Categorical
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericPlan {
    pub name: String,
    /// Fill value for missing cells, one below the observed minimum.
    pub sentinel: f64,
    pub with_indicator: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalPlan {
    pub name: String,
    /// One-hot levels in lexicographic order.
    pub levels: Vec<String>,
}

/// A frozen preprocessing plan: applying it to any compatible table yields
/// the same column order and width as on the training table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessPlan {
    pub dropped: Vec<(String, String)>,
    pub numeric: Vec<NumericPlan>,
    pub categorical: Vec<CategoricalPlan>,
    pub feature_names: Vec<String>,
}

impl PreprocessPlan {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn output_width(&self) -> usize {
        self.feature_names.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PreprocessConfig {
    pub missing_rate_threshold: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { missing_rate_threshold: 0.8 }
    }
}

/// Builds the preprocessing plan from a training table: feature columns with
/// missing fraction above the threshold are dropped, categoricals get sorted
/// one-hot level lists, numerics get a below-minimum sentinel plus an
/// indicator column when any value is missing.
pub fn build_plan(
    table: &RawTable,
    schema: &Schema,
    config: &PreprocessConfig,
) -> Result<PreprocessPlan> {
    let kinds = resolve_kinds(table, schema)?;
    let n_rows = table.n_rows() as f64;
    let mut dropped = Vec::new();
    let mut numeric = Vec::new();
    let mut categorical = Vec::new();
    for (k, (name, kind)) in kinds.iter().enumerate() {
        if !matches!(kind, ColumnKind::Numeric | ColumnKind::Categorical) {
            continue;
        }
        let cells = &table.columns[k];
        let missing = cells.iter().filter(|c| c.is_none()).count() as f64;
        if missing / n_rows > config.missing_rate_threshold {
            dropped.push((name.clone(), format!("missing rate {:.3}", missing / n_rows)));
            continue;
        }
        match kind {
            ColumnKind::Numeric => {
                let mut min = f64::INFINITY;
                for cell in cells.iter().flatten() {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| Error::Data(format!("non-numeric cell '{cell}' in '{name}'")))?;
                    min = min.min(v);
                }
                let sentinel = if min.is_finite() { min - 1.0 } else { -1.0 };
                numeric.push(NumericPlan {
                    name: name.clone(),
                    sentinel,
                    with_indicator: missing > 0.0,
                });
            }
            ColumnKind::Categorical => {
                let mut levels: Vec<String> = cells.iter().flatten().cloned().collect();
                levels.sort();
                levels.dedup();
                categorical.push(CategoricalPlan { name: name.clone(), levels });
            }
            _ => unreachable!(),
        }
    }
    let mut feature_names = Vec::new();
    for p in &numeric {
        feature_names.push(p.name.clone());
    }
    for p in numeric.iter().filter(|p| p.with_indicator) {
        feature_names.push(format!("{}__missing", p.name));
    }
    for p in &categorical {
        for level in &p.levels {
            feature_names.push(format!("{}={}", p.name, level));
        }
    }
    Ok(PreprocessPlan { dropped, numeric, categorical, feature_names })
}

/// Transforms a table through a frozen plan. Column order: numerics
/// (sentinel-filled), indicators, one-hot blocks. Unseen categorical levels
/// map to an all-zero block.
pub fn apply_plan(plan: &PreprocessPlan, table: &RawTable) -> Result<Vec<Vec<f64>>> {
    let n_rows = table.n_rows();
    let mut num_cols = Vec::with_capacity(plan.numeric.len());
    for p in &plan.numeric {
        num_cols.push(table.column(&p.name)?);
    }
    let mut cat_cols = Vec::with_capacity(plan.categorical.len());
    for p in &plan.categorical {
        cat_cols.push(table.column(&p.name)?);
    }
    let mut rows = Vec::with_capacity(n_rows);
    for i in 0..n_rows {
        let mut row = Vec::with_capacity(plan.output_width());
        for (p, col) in plan.numeric.iter().zip(&num_cols) {
            match &col[i] {
                Some(cell) => row.push(cell.parse::<f64>().map_err(|_| {
                    Error::Data(format!("non-numeric cell '{cell}' in '{}'", p.name))
                })?),
                None => row.push(p.sentinel),
            }
        }
        for (p, col) in plan.numeric.iter().zip(&num_cols) {
            if p.with_indicator {
                row.push(if col[i].is_none() { 1.0 } else { 0.0 });
            }
        }
        for (p, col) in plan.categorical.iter().zip(&cat_cols) {
            match &col[i] {
                Some(cell) => {
                    for level in &p.levels {
                        row.push(if level == cell { 1.0 } else { 0.0 });
                    }
                }
                None => row.extend(std::iter::repeat(0.0).take(p.levels.len())),
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Per-row `(event_period, event_observed)` labels from the table's
/// time/event columns mapped onto the grid.
pub fn bind_labels(
    table: &RawTable,
    schema: &Schema,
    grid: &ObservationGrid,
) -> Result<Vec<(usize, bool)>> {
    let kinds = resolve_kinds(table, schema)?;
    let time_name = &kinds.iter().find(|(_, k)| *k == ColumnKind::TimeLabel).unwrap().0;
    let event_name = &kinds.iter().find(|(_, k)| *k == ColumnKind::EventLabel).unwrap().0;
    let time_col = table.column(time_name)?;
    let event_col = table.column(event_name)?;
    let mut labels = Vec::with_capacity(table.n_rows());
    for i in 0..table.n_rows() {
        let t: f64 = time_col[i]
            .as_deref()
            .ok_or_else(|| Error::Data(format!("missing time label in row {i}")))?
            .parse()
            .map_err(|_| Error::Data(format!("non-numeric time label in row {i}")))?;
        let period = grid.map_to_period(t)?;
        let event = match event_col[i].as_deref() {
            Some("0") => false,
            Some("1") => true,
            other => {
                return Err(Error::Data(format!(
                    "event label must be 0 or 1, got {:?} in row {i}",
                    other
                )))
            }
        };
        labels.push((period, event));
    }
    Ok(labels)
}

/// Full pipeline: plan application plus label binding into a dataset.
pub fn build_dataset(
    table: &RawTable,
    schema: &Schema,
    plan: &PreprocessPlan,
    grid: &ObservationGrid,
) -> Result<SurvivalDataset> {
    let rows = apply_plan(plan, table)?;
    let labels = bind_labels(table, schema, grid)?;
    let records = rows
        .into_iter()
        .zip(labels)
        .map(|(features, (event_period, event_observed))| SurvivalRecord {
            features,
            event_period,
            event_observed,
        })
        .collect();
    SurvivalDataset::new(grid.clone(), records, plan.feature_names.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn basic_table() -> RawTable {
        let f = write_csv(
            "age,grade,income,dur,evt\n\
             30,A,,2.5,1\n\
             40,B,100,5.0,0\n\
             ,A,200,1.0,1\n\
             50,C,300,10.0,0\n",
        );
        load_table(f.path()).unwrap()
    }

    fn basic_schema() -> Schema {
        Schema::with_labels("dur", "evt")
    }

    #[test]
    fn load_table_types_and_missing() {
        let t = basic_table();
        assert_eq!(t.headers, vec!["age", "grade", "income", "dur", "evt"]);
        assert_eq!(t.n_rows(), 4);
        assert_eq!(t.column("age").unwrap()[2], None);
        assert_eq!(t.column("grade").unwrap()[0].as_deref(), Some("A"));
        assert!(t.column("nope").is_err());
    }

    #[test]
    fn declared_column_absent_is_error() {
        let t = basic_table();
        let schema = Schema::with_labels("duration_typo", "evt");
        assert!(resolve_kinds(&t, &schema).is_err());
    }

    #[test]
    fn kind_inference() {
        let t = basic_table();
        let kinds = resolve_kinds(&t, &basic_schema()).unwrap();
        assert_eq!(kinds[0], ("age".into(), ColumnKind::Numeric));
        assert_eq!(kinds[1], ("grade".into(), ColumnKind::Categorical));
        assert_eq!(kinds[3], ("dur".into(), ColumnKind::TimeLabel));
        assert_eq!(kinds[4], ("evt".into(), ColumnKind::EventLabel));
    }

    #[test]
    fn plan_drops_mostly_missing_column() {
        let f = write_csv(
            "sparse,x,dur,evt\n,1,1,0\n,2,1,0\n,3,1,0\n,4,1,0\n,5,1,0\n\
             ,6,1,0\n,7,1,0\n,8,1,0\n,9,1,0\n5,10,1,0\n",
        );
        let t = load_table(f.path()).unwrap();
        let plan = build_plan(&t, &basic_schema(), &PreprocessConfig::default()).unwrap();
        assert_eq!(plan.dropped.len(), 1);
        assert_eq!(plan.dropped[0].0, "sparse");
        assert_eq!(plan.numeric.len(), 1);
        assert_eq!(plan.feature_names, vec!["x"]);
    }

    #[test]
    fn plan_one_hot_and_sentinel() {
        let t = basic_table();
        let plan = build_plan(&t, &basic_schema(), &PreprocessConfig::default()).unwrap();
        // age: missing -> sentinel 29, indicator; income: missing -> 99, indicator
        let age = &plan.numeric[0];
        assert_eq!(age.sentinel, 29.0);
        assert!(age.with_indicator);
        let grade = &plan.categorical[0];
        assert_eq!(grade.levels, vec!["A", "B", "C"]);
        assert_eq!(
            plan.feature_names,
            vec![
                "age",
                "income",
                "age__missing",
                "income__missing",
                "grade=A",
                "grade=B",
                "grade=C"
            ]
        );
    }

    #[test]
    fn fully_observed_numeric_has_no_indicator() {
        let f = write_csv("x,dur,evt\n1,1,0\n2,2,1\n");
        let t = load_table(f.path()).unwrap();
        let plan = build_plan(&t, &basic_schema(), &PreprocessConfig::default()).unwrap();
        assert!(!plan.numeric[0].with_indicator);
        assert_eq!(plan.feature_names, vec!["x"]);
    }

    #[test]
    fn apply_plan_rows() {
        let t = basic_table();
        let plan = build_plan(&t, &basic_schema(), &PreprocessConfig::default()).unwrap();
        let rows = apply_plan(&plan, &t).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.len() == plan.output_width()));
        // row 0: age=30, income missing -> 99.0 sentinel + indicator 1, grade=A
        assert_eq!(rows[0], vec![30.0, 99.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        // row 2: age missing -> 29.0 + indicator
        assert_eq!(rows[2], vec![29.0, 200.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn apply_plan_unseen_level_all_zeros() {
        let t = basic_table();
        let plan = build_plan(&t, &basic_schema(), &PreprocessConfig::default()).unwrap();
        let f = write_csv("age,grade,income,dur,evt\n33,D,150,3.0,0\n");
        let test_table = load_table(f.path()).unwrap();
        let rows = apply_plan(&plan, &test_table).unwrap();
        assert_eq!(&rows[0][4..7], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn apply_plan_idempotent_and_width_stable() {
        let t = basic_table();
        let plan = build_plan(&t, &basic_schema(), &PreprocessConfig::default()).unwrap();
        let a = apply_plan(&plan, &t).unwrap();
        let b = apply_plan(&plan, &t).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn plan_column_missing_from_table_is_error() {
        let t = basic_table();
        let plan = build_plan(&t, &basic_schema(), &PreprocessConfig::default()).unwrap();
        let f = write_csv("age,income,dur,evt\n33,150,3.0,0\n");
        let narrower = load_table(f.path()).unwrap();
        assert!(apply_plan(&plan, &narrower).is_err());
    }

    #[test]
    fn bind_labels_mapping() {
        let grid = ObservationGrid::uniform(24, 1.0).unwrap();
        let f = write_csv("x,dur,evt\n1,2.5,1\n2,30,0\n");
        let t = load_table(f.path()).unwrap();
        let labels = bind_labels(&t, &basic_schema(), &grid).unwrap();
        assert_eq!(labels, vec![(3, true), (25, false)]);
    }

    #[test]
    fn bind_labels_errors() {
        let grid = ObservationGrid::uniform(12, 1.0).unwrap();
        let schema = basic_schema();
        let f = write_csv("x,dur,evt\n1,-2.5,1\n");
        assert!(bind_labels(&load_table(f.path()).unwrap(), &schema, &grid).is_err());
        let f = write_csv("x,dur,evt\n1,,1\n");
        assert!(bind_labels(&load_table(f.path()).unwrap(), &schema, &grid).is_err());
        let f = write_csv("x,dur,evt\n1,2.5,2\n");
        assert!(bind_labels(&load_table(f.path()).unwrap(), &schema, &grid).is_err());
    }

    #[test]
    fn build_dataset_end_to_end() {
        let grid = ObservationGrid::uniform(12, 1.0).unwrap();
        let t = basic_table();
        let schema = basic_schema();
        let plan = build_plan(&t, &schema, &PreprocessConfig::default()).unwrap();
        let ds = build_dataset(&t, &schema, &plan, &grid).unwrap();
        assert_eq!(ds.n_records(), 4);
        assert_eq!(ds.n_features(), 7);
        assert_eq!(ds.records[0].event_period, 3);
        assert!(ds.records[0].event_observed);
    }

    #[test]
    fn numeric_passthrough_unchanged() {
        let f = write_csv("x,dur,evt\n1.25,1,0\n-3.5,2,1\n0.0,3,0\n");
        let t = load_table(f.path()).unwrap();
        let plan = build_plan(&t, &basic_schema(), &PreprocessConfig::default()).unwrap();
        let rows = apply_plan(&plan, &t).unwrap();
        assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![1.25, -3.5, 0.0]);
    }
}
