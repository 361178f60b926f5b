//! The model × dataset benchmark matrix.

use std::collections::BTreeMap;

use serde::Serialize;

use super::grid::{grid_search, hidden_grid, learning_rate_grid, smoothing_grid, GridAxis, GridResult, Prefer};
use super::metrics::{accuracy_all, score, Scores};
use super::report::{BenchmarkReport, DatasetInfo, RowResult, RowStatus};
use super::runs::{measure_time, repeated_runs};
use crate::datamodel::Dataset;
use crate::error::{Error, Result};
use crate::model::{train_model, Family, Hyperparams, ModelKind};
use crate::par::Exec;

#[derive(Clone, Debug)]
pub struct DatasetInput {
    pub name: String,
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl DatasetInput {
    fn info(&self) -> DatasetInfo {
        DatasetInfo {
            name: self.name.clone(),
            residents: self.test.label_space.residents(),
            alphabet: self.test.label_space.sizes().to_vec(),
            train_days: self.train.len(),
            val_days: self.val.len(),
            test_days: self.test.len(),
            test_steps: self.test.total_steps(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkPlan {
    pub models: Vec<ModelKind>,
    /// Seed, iteration caps and the fallback hyperparameters.
    pub base: Hyperparams,
    pub alpha_grid: Vec<f64>,
    pub hidden_grid: Vec<f64>,
    pub learning_rate_grid: Vec<f64>,
    pub max_expansions: usize,
    /// Repeats for recurrent models.
    pub repeats: usize,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for BenchmarkPlan {
    fn default() -> Self {
        Self {
            models: ModelKind::table_rows(),
            base: Hyperparams::default(),
            alpha_grid: smoothing_grid(),
            hidden_grid: hidden_grid(),
            learning_rate_grid: learning_rate_grid(),
            max_expansions: 2,
            repeats: 50,
            exec: Exec::Parallel,
        }
    }
}

fn select(plan: &BenchmarkPlan, kind: ModelKind, data: &DatasetInput) -> Result<(Hyperparams, Option<GridResult>)> {
    let axes = match kind.family {
        Family::Hmm | Family::Fhmm => vec![GridAxis::new("alpha", plan.alpha_grid.clone(), Prefer::Larger)],
        Family::Rnn(_) => vec![
            GridAxis::new("hidden", plan.hidden_grid.clone(), Prefer::Smaller).integer(),
            GridAxis::new("learning_rate", plan.learning_rate_grid.clone(), Prefer::Smaller),
        ],
        Family::Crf | Family::Fcrf => return Ok((plan.base.clone(), None)),
    };
    let apply = |p: &[f64]| {
        let mut hp = plan.base.clone();
        match kind.family {
            Family::Hmm | Family::Fhmm => hp.alpha = p[0],
            _ => {
                hp.hidden = p[0] as usize;
                hp.learning_rate = p[1];
            }
        }
        hp
    };
    let result = grid_search(axes, plan.max_expansions, plan.exec, |p| {
        let (model, _) = train_model(kind, &apply(p), &data.train, Some(&data.val), Exec::Sequential)?;
        accuracy_all(&model.predict_dataset(&data.val, Exec::Sequential)?, &data.val.instances)
    })?;
    Ok((apply(&result.best), Some(result)))
}

fn fit_and_score(kind: ModelKind, hp: &Hyperparams, data: &DatasetInput, exec: Exec) -> Result<Scores> {
    let (model, _) = train_model(kind, hp, &data.train, Some(&data.val), exec)?;
    let preds = model.predict_dataset(&data.test, exec)?;
    score(&preds, &data.test.instances, data.test.label_space.residents())
}

fn run_row(plan: &BenchmarkPlan, kind: ModelKind, data: &DatasetInput) -> Result<RowResult> {
    let (hp, grid) = select(plan, kind, data)?;
    // the timed run has the machine to itself
    let (timed, seconds) = measure_time(|| fit_and_score(kind, &hp, data, plan.exec));
    let repeats = if kind.is_deterministic() { 1 } else { plan.repeats.max(1) };
    let summary = repeated_runs(hp.seed, repeats, plan.exec, |seed| {
        if seed == hp.seed {
            return timed.as_ref().map(Scores::clone).map_err(|e| Error::Training(e.to_string()));
        }
        fit_and_score(kind, &Hyperparams { seed, ..hp.clone() }, data, Exec::Sequential)
    })?;
    let mut selected = BTreeMap::new();
    match kind.family {
        Family::Hmm | Family::Fhmm => {
            selected.insert("alpha".to_string(), hp.alpha);
        }
        Family::Rnn(_) => {
            selected.insert("hidden".to_string(), hp.hidden as f64);
            selected.insert("learning_rate".to_string(), hp.learning_rate);
        }
        Family::Crf | Family::Fcrf => {
            selected.insert("max_iter".to_string(), hp.max_iter as f64);
        }
    }
    Ok(RowResult {
        model: kind.name(),
        encoding: kind.encoding,
        dataset: data.name.clone(),
        status: RowStatus::Completed,
        error: None,
        scores: Some(summary.mean),
        std: Some(summary.std),
        runs: summary.completed,
        excluded: summary.excluded,
        run_failures: summary.failures,
        seconds: timed.is_ok().then_some(seconds),
        selected,
        grid,
    })
}

/// Runs every requested model on every dataset. Rows run one after
/// another so timings are not disturbed; grid points and repeats inside a
/// row use `plan.exec`. A failing row is recorded and the matrix continues.
pub fn run_benchmark(plan: &BenchmarkPlan, datasets: &[DatasetInput]) -> Result<BenchmarkReport> {
    if plan.models.is_empty() {
        return Err(Error::Config("no models requested".into()));
    }
    if datasets.is_empty() {
        return Err(Error::Config("no datasets given".into()));
    }
    let mut report = BenchmarkReport {
        datasets: datasets.iter().map(DatasetInput::info).collect(),
        models: plan.models.iter().map(ModelKind::name).collect(),
        rows: Vec::new(),
    };
    for data in datasets {
        for &kind in &plan.models {
            log::info!("{} on {}", kind.name(), data.name);
            let row = run_row(plan, kind, data).unwrap_or_else(|e| {
                log::warn!("{} on {} failed: {e}", kind.name(), data.name);
                RowResult::failed(kind.name(), kind.encoding, data.name.clone(), e.to_string())
            });
            report.rows.push(row);
        }
    }
    Ok(report)
}
