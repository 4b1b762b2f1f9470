use anyhow::Result;
use paddy_core::eval::{classification_metrics, error_by_origin, MetricsReport};
use paddy_core::learn::{baseline_proportional, expected_baseline_accuracy, EnsembleModel};
use paddy_core::rng::{derive_named, derive_seed};
use serde::Serialize;

use super::train::{holdout, load_dataset};
use crate::inputs::create;
use crate::manifest::{beside, RunManifest};
use crate::EvaluateArgs;

#[derive(Debug, Serialize)]
struct Baseline {
    expected_accuracy: f64,
    trials: usize,
    mean_accuracy: f64,
    sd_accuracy: f64,
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    task: String,
    kind: String,
    metrics: MetricsReport,
    baseline: Baseline,
    /// Share of misclassified plots by original three-way label.
    errors_by_origin: Vec<(String, f64)>,
}

fn baseline(train_y: &[usize], test_y: &[usize], n_classes: usize, trials: usize, seed: u64) -> Baseline {
    let mut counts = vec![0usize; n_classes];
    for &c in train_y {
        counts[c] += 1;
    }
    let stream = derive_named(seed, "baseline");
    let mut accs = Vec::with_capacity(trials);
    for t in 0..trials {
        let pred = baseline_proportional(train_y, test_y, derive_seed(stream, t as u64));
        accs.push(pred.iter().zip(test_y).filter(|(a, b)| a == b).count() as f64 / test_y.len() as f64);
    }
    let n = trials.max(1) as f64;
    let mean = accs.iter().sum::<f64>() / n;
    let sd = (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    Baseline {
        expected_accuracy: expected_baseline_accuracy(&counts),
        trials,
        mean_accuracy: mean,
        sd_accuracy: sd,
    }
}

pub fn run(a: EvaluateArgs) -> Result<()> {
    let config = format!("holdout={} baseline_trials={}", a.holdout, a.baseline_trials);
    let mut manifest = RunManifest::start("evaluate", &config, Some(a.seed));
    manifest.input(&a.features)?;
    manifest.input(&a.model)?;
    let model = EnsembleModel::load(&a.model)?;
    let ds = load_dataset(&a.features)?;
    let (train, test) = holdout(&ds, a.holdout, a.seed)?;
    let task = model.task;
    let y = test.y(task);
    let pred: Vec<usize> = (0..test.len()).map(|i| model.predict_row(test.row(i)).class).collect();
    let metrics = classification_metrics(&y, &pred, task.n_classes())?;
    let origins = error_by_origin(&y, &pred, &test.origin_indices(), 3)?;
    let report = EvaluationReport {
        task: task.to_string(),
        kind: model.kind.to_string(),
        baseline: baseline(&train.y(task), &y, task.n_classes(), a.baseline_trials, a.seed),
        errors_by_origin: paddy_core::timeseries::PracticeLabel::ALL
            .iter()
            .zip(origins.iter().copied().chain(std::iter::repeat(0.0)))
            .map(|(l, s)| (l.to_string(), s))
            .collect(),
        metrics,
    };
    manifest.stage("score", format!("{} test plots", test.len()));
    let m = &report.metrics;
    println!("{} {} on {} plots", report.kind, report.task, m.n_test);
    println!("  accuracy     {:.4}", m.overall_accuracy);
    println!("  weighted F1  {:.4}", m.f1_weighted);
    println!("  macro F1     {:.4}", m.f1_macro);
    println!(
        "  baseline     {:.4} expected, {:.4} +/- {:.4} over {} trials",
        report.baseline.expected_accuracy, report.baseline.mean_accuracy, report.baseline.sd_accuracy, report.baseline.trials
    );
    for c in &m.per_class {
        println!("  {:<8} precision {:.4} recall {:.4} F1 {:.4} support {}", task.class_name(c.class), c.precision, c.recall, c.f1, c.support);
    }
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        std::io::Write::write_all(&mut w, b"\n")?;
        std::io::Write::flush(&mut w)?;
        manifest.output(out)?;
        manifest.finish(&beside(out))?;
    }
    Ok(())
}
