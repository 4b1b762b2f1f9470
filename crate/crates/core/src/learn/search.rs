use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{EnsembleModel, Hyperparams, ModelKind};
use super::{stratified_split, train, LabeledDataset, Task};
use crate::error::{Error, Result};
use crate::eval::weighted_f1;
use crate::rng::{derive_named, derive_seed, rng_from_seed};

pub const INNER_VALIDATION_FRAC: f64 = 0.2;
pub const RF_TREES: (usize, usize) = (100, 800);
pub const RF_DEPTH: (usize, usize) = (3, 20);
pub const RF_MIN_LEAF: (usize, usize) = (1, 10);
pub const GB_TREES: (usize, usize) = (50, 500);
pub const GB_DEPTH: (usize, usize) = (2, 8);
pub const GB_LEARNING_RATE: (f64, f64) = (0.01, 0.3);
pub const GB_MIN_LEAF: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub hyperparams: Hyperparams,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub model: EnsembleModel,
    pub trials: Vec<Trial>,
    pub best: usize,
}

/// The `budget` configurations drawn for `(kind, seed)`; longer budgets extend
/// shorter ones.
pub fn sample_configs(kind: ModelKind, budget: usize, seed: u64) -> Vec<Hyperparams> {
    let mut rng = rng_from_seed(derive_named(seed, "search-space"));
    (0..budget)
        .map(|_| match kind {
            ModelKind::Rf => Hyperparams {
                n_trees: rng.random_range(RF_TREES.0..=RF_TREES.1),
                max_depth: rng.random_range(RF_DEPTH.0..=RF_DEPTH.1),
                min_leaf: rng.random_range(RF_MIN_LEAF.0..=RF_MIN_LEAF.1),
                learning_rate: None,
                max_features: None,
            },
            ModelKind::Gb => Hyperparams {
                n_trees: rng.random_range(GB_TREES.0..=GB_TREES.1),
                max_depth: rng.random_range(GB_DEPTH.0..=GB_DEPTH.1),
                min_leaf: GB_MIN_LEAF,
                learning_rate: Some(rng.random_range(GB_LEARNING_RATE.0.ln()..=GB_LEARNING_RATE.1.ln()).exp()),
                max_features: None,
            },
        })
        .collect()
}

/// Seeded random search scored by weighted F1 on an inner stratified
/// validation split, then a refit of the best configuration on all of `train`.
/// Ties keep the earliest trial.
pub fn hyperparam_search(train_set: &LabeledDataset, kind: ModelKind, task: Task, budget: usize, seed: u64) -> Result<SearchResult> {
    search_configs(train_set, kind, task, &sample_configs(kind, budget, seed), seed)
}

/// As [`hyperparam_search`] over an explicit configuration list.
pub fn search_configs(
    train_set: &LabeledDataset,
    kind: ModelKind,
    task: Task,
    configs: &[Hyperparams],
    seed: u64,
) -> Result<SearchResult> {
    if configs.is_empty() {
        return Err(Error::Input("search budget must be at least 1".into()));
    }
    let (inner_train, inner_val) =
        stratified_split(&train_set.origin_indices(), INNER_VALIDATION_FRAC, derive_named(seed, "inner-split"))?;
    let fit_set = train_set.subset(&inner_train);
    let val_set = train_set.subset(&inner_val);
    let y_val = val_set.y(task);
    let trial_seed = derive_named(seed, "trial");
    let trials = configs
        .par_iter()
        .enumerate()
        .map(|(t, hp)| {
            let m = train(&fit_set, kind, task, hp, derive_seed(trial_seed, t as u64))?;
            let pred: Vec<usize> = (0..val_set.len()).map(|i| m.predict_row(val_set.row(i)).class).collect();
            Ok(Trial { hyperparams: *hp, score: weighted_f1(&y_val, &pred, task.n_classes())? })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = (0..trials.len()).fold(0, |b, t| if trials[t].score > trials[b].score { t } else { b });
    let mut model = train(train_set, kind, task, &trials[best].hyperparams, derive_named(seed, "refit"))?;
    model.validation_f1 = Some(trials[best].score);
    Ok(SearchResult { model, trials, best })
}
