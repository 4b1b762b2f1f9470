//! Temporal-window ablation: re-extract features per window, search, train and
//! score every task on one shared held-out split.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, MetricsReport};
use crate::error::{Error, Result};
use crate::features::{day_label, extract_features, FeatureRow, TemporalWindow};
use crate::learn::{hyperparam_search, stratified_split, LabeledDataset, ModelKind, Task};
use crate::rng::derive_named;
use crate::timeseries::PlotSeries;

pub const ABLATION_HEADER: [&str; 13] = [
    "row", "window", "start_day", "end_day", "step", "task", "kind", "accuracy", "f1_weighted", "f1_macro", "n_test",
    "validation_f1", "n_train",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub row: usize,
    pub window: TemporalWindow,
    pub task: Task,
    pub kind: ModelKind,
    pub validation_f1: f64,
    pub n_train: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub cells: Vec<AblationCell>,
}

impl AblationGrid {
    pub fn cell(&self, row: usize, task: Task) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.row == row && c.task == task)
    }
}

/// Labelled feature matrix of `plots` over `window`.
pub fn window_dataset(plots: &[PlotSeries], window: &TemporalWindow) -> Result<LabeledDataset> {
    let rows = plots
        .par_iter()
        .map(|p| {
            let vector = extract_features(p, window)?;
            let label = p.label.ok_or_else(|| Error::Input(format!("plot {} has no label", p.plot_id())))?;
            Ok(FeatureRow { vector, label: Some(label) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ds = LabeledDataset::from_rows(&rows)?;
    ds.planting_days = plots.iter().map(|p| p.planting_day).collect();
    Ok(ds)
}

/// One cell per `(window, task)`, in window-major order. Each cell searches
/// every kind in `kinds` with `budget` trials and reports the kind with the
/// best inner-validation score (ties to the earlier kind) on the held-out
/// split, which is stratified on the original three-way labels and shared by
/// all cells.
pub fn run_ablation(
    plots: &[PlotSeries],
    windows: &[TemporalWindow],
    tasks: &[Task],
    kinds: &[ModelKind],
    budget: usize,
    test_frac: f64,
    seed: u64,
) -> Result<AblationGrid> {
    if kinds.is_empty() || tasks.is_empty() {
        return Err(Error::Input("ablation needs at least one task and one model kind".into()));
    }
    let origin: Vec<usize> = plots
        .iter()
        .map(|p| p.label.map(|l| l.index()).ok_or_else(|| Error::Input(format!("plot {} has no label", p.plot_id()))))
        .collect::<Result<_>>()?;
    let (train_idx, test_idx) = stratified_split(&origin, test_frac, derive_named(seed, "holdout"))?;
    let cells = windows
        .par_iter()
        .enumerate()
        .map(|(w, window)| {
            let ds = window_dataset(plots, window)?;
            let (train, test) = (ds.subset(&train_idx), ds.subset(&test_idx));
            tasks
                .iter()
                .map(|&task| {
                    let mut best: Option<(ModelKind, crate::learn::EnsembleModel)> = None;
                    for &kind in kinds {
                        let m = hyperparam_search(&train, kind, task, budget, derive_named(seed, task.as_str()))?.model;
                        if best.as_ref().is_none_or(|(_, b)| m.validation_f1 > b.validation_f1) {
                            best = Some((kind, m));
                        }
                    }
                    let (kind, model) = best.expect("at least one kind");
                    let pred: Vec<usize> = (0..test.len()).map(|i| model.predict_row(test.row(i)).class).collect();
                    Ok(AblationCell {
                        row: w + 1,
                        window: *window,
                        task,
                        kind,
                        validation_f1: model.validation_f1.unwrap_or(0.0),
                        n_train: train.len(),
                        metrics: classification_metrics(&test.y(task), &pred, task.n_classes())?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationGrid { cells: cells.into_iter().flatten().collect() })
}

pub fn write_ablation_csv<W: Write>(mut w: W, comments: &[String], grid: &AblationGrid) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(ABLATION_HEADER)?;
    for c in &grid.cells {
        let m = &c.metrics;
        wtr.write_record([
            c.row.to_string(),
            format!("{} - {}", day_label(c.window.start_day), day_label(c.window.end_day)),
            c.window.start_day.to_string(),
            c.window.end_day.to_string(),
            c.window.step_days.to_string(),
            c.task.to_string(),
            c.kind.to_string(),
            format!("{:.4}", m.overall_accuracy),
            format!("{:.4}", m.f1_weighted),
            format!("{:.4}", m.f1_macro),
            m.n_test.to_string(),
            format!("{:.4}", c.validation_f1),
            c.n_train.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
