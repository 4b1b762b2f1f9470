use anyhow::{Context, Result};
use paddy_core::learn::Task;
use paddy_core::scale::{aggregate_districts, read_predictions_csv, write_districts_csv};

use crate::inputs::{create, open};
use crate::manifest::{beside, RunManifest};
use crate::AggregateArgs;

pub fn run(a: AggregateArgs) -> Result<()> {
    let task: Task = a.task.into();
    let mut manifest = RunManifest::start("aggregate", &format!("task={task}"), None);
    manifest.input(&a.predictions)?;
    let preds = read_predictions_csv(open(&a.predictions)?, task).with_context(|| format!("reading {}", a.predictions.display()))?;
    let summaries = aggregate_districts(&preds, task.positive_class());
    manifest.stage("aggregate", format!("{} plots in {} districts", preds.len(), summaries.len()));
    let mut w = create(&a.out)?;
    write_districts_csv(&mut w, &summaries)?;
    std::io::Write::flush(&mut w)?;
    manifest.output(&a.out)?;
    manifest.finish(&beside(&a.out))?;
    for s in &summaries {
        println!("{:<18} {:>6} plots {:>6} {} {:>12.1} acres", s.district, s.n_plots, s.n_positive, task.class_name(task.positive_class()), s.positive_acres());
    }
    Ok(())
}
