//! The three subcommand implementations. All output files are written
//! atomically (temp file in the target directory, then rename) so an
//! interrupted run never leaves a truncated artifact behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use gbst_core::booster::{fit, predict_survival, BoosterModel};
use gbst_core::dataio::{
    build_dataset, build_plan, load_table, PreprocessConfig, PreprocessPlan, RawTable, Schema,
};
use gbst_core::metrics::{evaluate_model, RiskReduction};
use gbst_core::survival::SurvivalDataset;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

fn read_to_string(path: &Path, what: &str) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {what} {}: {e}", path.display())))
}

fn load_schema(config: &RunConfig) -> Result<Schema> {
    let mut schema = match &config.data.schema {
        Some(path) => Schema::from_json(&read_to_string(path, "schema")?)?,
        None => Schema { columns: Vec::new() },
    };
    let labels = Schema::with_labels(&config.data.time_column, &config.data.event_column);
    schema.columns.extend(labels.columns);
    Ok(schema)
}

fn load_data(path: &Path) -> Result<RawTable> {
    if !path.exists() {
        return Err(CliError::Data(format!("data file {} does not exist", path.display())));
    }
    Ok(load_table(path)?)
}

pub struct TrainOutputs {
    pub model: PathBuf,
    pub plan: PathBuf,
    pub loss_trace: PathBuf,
}

pub fn train(config: &RunConfig, data_path: &Path, out_dir: &Path, seed: Option<u64>)
    -> Result<TrainOutputs>
{
    let grid = config
        .grid
        .as_ref()
        .ok_or_else(|| CliError::Usage("train needs a [grid] section".into()))?
        .build()?;
    let schema = load_schema(config)?;
    let table = load_data(data_path)?;
    let plan = build_plan(
        &table,
        &schema,
        &PreprocessConfig {
            missing_rate_threshold: config.preprocess.missing_rate_threshold,
        },
    )?;
    let dataset = build_dataset(&table, &schema, &plan, &grid)?;
    let params = config.booster.build(seed);
    let model = fit(&dataset, &params)?;

    let mut trace_csv = String::from("iteration,loss\n");
    for (m, loss) in model.training_loss_trace.iter().enumerate() {
        trace_csv.push_str(&format!("{m},{loss}\n"));
    }

    let outputs = TrainOutputs {
        model: out_dir.join("model.json"),
        plan: out_dir.join("plan.json"),
        loss_trace: out_dir.join("loss_trace.csv"),
    };
    write_atomic(&outputs.model, &model.to_json()?)?;
    write_atomic(&outputs.plan, &plan.to_json()?)?;
    write_atomic(&outputs.loss_trace, &trace_csv)?;
    Ok(outputs)
}

pub fn load_model(path: &Path) -> Result<BoosterModel> {
    Ok(BoosterModel::from_json(&read_to_string(path, "model")?)?)
}

pub fn load_plan(path: &Path) -> Result<PreprocessPlan> {
    Ok(PreprocessPlan::from_json(&read_to_string(path, "plan")?)?)
}

/// Feature rows for unlabeled prediction input.
fn feature_rows(plan: &PreprocessPlan, table: &RawTable) -> Result<Vec<Vec<f64>>> {
    Ok(gbst_core::dataio::apply_plan(plan, table)?)
}

pub fn predict(model_path: &Path, plan_path: &Path, data_path: &Path, out_dir: &Path)
    -> Result<PathBuf>
{
    let model = load_model(model_path)?;
    let plan = load_plan(plan_path)?;
    let table = load_data(data_path)?;
    let rows = feature_rows(&plan, &table)?;

    let j_count = model.period_count();
    let mut csv = String::from("record");
    for j in 1..=j_count {
        csv.push_str(&format!(",h_{j}"));
    }
    for j in 1..=j_count {
        csv.push_str(&format!(",s_{j}"));
    }
    csv.push('\n');
    for (i, x) in rows.iter().enumerate() {
        let (hazards, survival) = predict_survival(&model, x)?;
        csv.push_str(&i.to_string());
        for h in hazards {
            csv.push_str(&format!(",{h}"));
        }
        for s in survival {
            csv.push_str(&format!(",{s}"));
        }
        csv.push('\n');
    }

    let path = out_dir.join("predictions.csv");
    write_atomic(&path, &csv)?;
    Ok(path)
}

pub struct EvaluateOutputs {
    pub report: PathBuf,
    pub period_metrics: PathBuf,
    pub deciles: PathBuf,
}

pub fn evaluate(
    config: &RunConfig,
    model_path: &Path,
    plan_path: &Path,
    data_path: &Path,
    out_dir: &Path,
) -> Result<EvaluateOutputs> {
    let model = load_model(model_path)?;
    let plan = load_plan(plan_path)?;
    let schema = load_schema(config)?;
    let table = load_data(data_path)?;
    let dataset: SurvivalDataset = build_dataset(&table, &schema, &plan, &model.grid)?;

    let reduction =
        config.evaluate.risk_reduction.unwrap_or(RiskReduction::NegExpectedSurvival);
    let decile_periods = config
        .evaluate
        .decile_periods
        .clone()
        .unwrap_or_else(|| vec![model.period_count()]);
    let report = evaluate_model(&model, &dataset, reduction, &decile_periods)?;

    let outputs = EvaluateOutputs {
        report: out_dir.join("report.json"),
        period_metrics: out_dir.join("period_metrics.csv"),
        deciles: out_dir.join("deciles.csv"),
    };
    write_atomic(&outputs.report, &serde_json::to_string_pretty(&report).map_err(|e| {
        CliError::Internal(format!("report serialization failed: {e}"))
    })?)?;
    write_atomic(&outputs.period_metrics, &report.period_csv())?;
    write_atomic(&outputs.deciles, &report.decile_csv())?;
    Ok(outputs)
}
