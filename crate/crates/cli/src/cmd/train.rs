use anyhow::{Context, Result};
use paddy_core::features::read_features_csv;
use paddy_core::learn::{hyperparam_search, stratified_split, LabeledDataset, ModelKind, Task};
use paddy_core::rng::derive_named;

use crate::inputs::{create, open};
use crate::manifest::{beside, RunManifest};
use crate::{TrainArgs, UsageError};

pub fn load_dataset(path: &std::path::Path) -> Result<LabeledDataset> {
    let rows = read_features_csv(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    if rows.is_empty() {
        return Err(UsageError(format!("{} has no feature rows", path.display())).into());
    }
    LabeledDataset::from_rows(&rows).with_context(|| format!("{} must be fully labelled", path.display()))
}

/// Train and test parts of a stratified split on the three-way labels. A zero
/// fraction keeps everything on both sides.
pub fn holdout(ds: &LabeledDataset, frac: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if frac == 0.0 {
        return Ok((ds.clone(), ds.clone()));
    }
    let (train, test) = stratified_split(&ds.origin_indices(), frac, derive_named(seed, "holdout"))?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

pub fn run(a: TrainArgs) -> Result<()> {
    let (task, kind): (Task, ModelKind) = (a.task.into(), a.kind.into());
    let config = format!("task={task} kind={kind} budget={} holdout={}", a.budget, a.holdout);
    let mut manifest = RunManifest::start("train", &config, Some(a.seed));
    manifest.input(&a.features)?;
    let ds = load_dataset(&a.features)?;
    let (train, _) = holdout(&ds, a.holdout, a.seed)?;
    let result = hyperparam_search(&train, kind, task, a.budget as usize, derive_named(a.seed, task.as_str()))?;
    let m = &result.model;
    manifest.stage(
        "search",
        format!("{} trials on {} plots, best #{} validation F1 {:.4}", result.trials.len(), train.len(), result.best, result.trials[result.best].score),
    );
    let mut out = create(&a.out)?;
    m.to_writer(&mut out)?;
    std::io::Write::flush(&mut out)?;
    manifest.output(&a.out)?;
    manifest.finish(&beside(&a.out))?;
    let hp = &m.hyperparams;
    println!(
        "{kind} {task}: {} trees, depth {}, min leaf {}{} | validation F1 {:.4} | {}",
        hp.n_trees,
        hp.max_depth,
        hp.min_leaf,
        hp.learning_rate.map(|lr| format!(", learning rate {lr:.4}")).unwrap_or_default(),
        m.validation_f1.unwrap_or(f64::NAN),
        a.out.display()
    );
    Ok(())
}
