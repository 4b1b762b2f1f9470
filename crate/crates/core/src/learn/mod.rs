//! Tree-ensemble learners, dimensional task construction and splitting.
//!
//! The three-way practice label is collapsed per task: sowing separates DSR
//! from transplanted fields, irrigation separates AWD from continuous
//! flooding. Class index 1 is the practice of interest in both binary tasks.

mod binning;
mod boost;
mod forest;
mod model;
mod search;
mod tree;

pub use binning::BinnedMatrix;
pub use boost::{logistic_loss, sigmoid};
pub use model::{EnsembleModel, Hyperparams, ModelKind, Prediction, MODEL_FORMAT_VERSION};
pub use search::{
    hyperparam_search, sample_configs, search_configs, SearchResult, Trial, GB_DEPTH, GB_LEARNING_RATE, GB_MIN_LEAF,
    GB_TREES, INNER_VALIDATION_FRAC, RF_DEPTH, RF_MIN_LEAF, RF_TREES,
};
pub use tree::Tree;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureRow, TemporalWindow, FEATURE_COUNT, SCHEMA_VERSION};
use crate::rng::{derive_seed, rng_from_seed};
use crate::timeseries::{Day, PracticeLabel};

pub const RF_BINS: usize = 255;
pub const GB_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Combined,
    Sowing,
    Irrigation,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Combined, Task::Sowing, Task::Irrigation];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Combined => "combined",
            Task::Sowing => "sowing",
            Task::Irrigation => "irrigation",
        }
    }

    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Task::Combined => &["CONTROL", "DSR", "AWD"],
            Task::Sowing => &["PTR", "DSR"],
            Task::Irrigation => &["CF", "AWD"],
        }
    }

    pub fn n_classes(self) -> usize {
        self.class_names().len()
    }

    pub fn class_name(self, class: usize) -> &'static str {
        self.class_names()[class]
    }

    /// Class counted in district summaries.
    pub fn positive_class(self) -> usize {
        match self {
            Task::Combined => PracticeLabel::Dsr.index(),
            Task::Sowing | Task::Irrigation => 1,
        }
    }

    pub fn collapse(self, label: PracticeLabel) -> usize {
        match (self, label) {
            (Task::Combined, l) => l.index(),
            (Task::Sowing, PracticeLabel::Dsr) => 1,
            (Task::Sowing, _) => 0,
            (Task::Irrigation, PracticeLabel::Awd) => 1,
            (Task::Irrigation, _) => 0,
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "combined" => Ok(Task::Combined),
            "sowing" => Ok(Task::Sowing),
            "irrigation" => Ok(Task::Irrigation),
            _ => Err(Error::Input(format!("unknown task {s:?}, expected combined, sowing or irrigation"))),
        }
    }
}

pub fn collapse_labels(labels: &[PracticeLabel], task: Task) -> Vec<usize> {
    labels.iter().map(|&l| task.collapse(l)).collect()
}

/// Feature matrix with original three-way labels. Planting days are kept for
/// evaluation only and never enter the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub plot_ids: Vec<String>,
    pub n_features: usize,
    /// Row-major, `n_features` values per plot.
    pub x: Vec<f64>,
    pub labels: Vec<PracticeLabel>,
    pub planting_days: Vec<Option<Day>>,
    pub window: Option<TemporalWindow>,
}

impl LabeledDataset {
    pub fn from_rows(rows: &[FeatureRow]) -> Result<Self> {
        let mut ds = Self {
            plot_ids: Vec::with_capacity(rows.len()),
            n_features: FEATURE_COUNT,
            x: Vec::with_capacity(rows.len() * FEATURE_COUNT),
            labels: Vec::with_capacity(rows.len()),
            planting_days: Vec::with_capacity(rows.len()),
            window: rows.first().map(|r| r.vector.window),
        };
        for r in rows {
            let label = r.label.ok_or_else(|| Error::Input(format!("plot {} has no label", r.vector.plot_id)))?;
            if r.vector.values.len() != FEATURE_COUNT {
                return Err(Error::Schema {
                    expected: format!("{SCHEMA_VERSION} ({FEATURE_COUNT} features)"),
                    found: format!("{} features", r.vector.values.len()),
                });
            }
            if ds.window != Some(r.vector.window) {
                ds.window = None;
            }
            ds.plot_ids.push(r.vector.plot_id.clone());
            ds.x.extend_from_slice(&r.vector.values);
            ds.labels.push(label);
            ds.planting_days.push(None);
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn y(&self, task: Task) -> Vec<usize> {
        collapse_labels(&self.labels, task)
    }

    pub fn origin_indices(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.index()).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            plot_ids: idx.iter().map(|&i| self.plot_ids[i].clone()).collect(),
            n_features: self.n_features,
            x: idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            planting_days: idx.iter().map(|&i| self.planting_days[i]).collect(),
            window: self.window,
        }
    }
}

/// Per-class test quotas: proportional floors, remainder by largest fractional
/// part (ties to the lower class index), each clamped to `[1, n_c - 1]`.
pub fn stratified_quotas(counts: &[usize], test_frac: f64) -> Result<Vec<usize>> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::Stratification(format!("test fraction must lie in (0, 1), got {test_frac}")));
    }
    if let Some(c) = counts.iter().position(|&n| n == 1) {
        return Err(Error::Stratification(format!("class {c} has a single member")));
    }
    let n: usize = counts.iter().sum();
    let n_test = (n as f64 * test_frac - 1e-9).ceil() as usize;
    let exact: Vec<f64> = counts.iter().map(|&c| c as f64 * n_test as f64 / n as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &c in order.iter().take(n_test.saturating_sub(assigned)) {
        quotas[c] += 1;
    }
    for (q, &c) in quotas.iter_mut().zip(counts) {
        if c > 0 {
            *q = (*q).clamp(1, c - 1);
        }
    }
    Ok(quotas)
}

/// Stratified train/test index split, both sorted ascending.
pub fn stratified_split(labels: &[usize], test_frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let counts: Vec<usize> = members.iter().map(Vec::len).collect();
    let quotas = stratified_quotas(&counts, test_frac)?;
    let mut is_test = vec![false; labels.len()];
    for (c, m) in members.iter_mut().enumerate() {
        m.shuffle(&mut rng_from_seed(derive_seed(seed, c as u64)));
        for &i in &m[..quotas[c]] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| is_test[i]);
    Ok((train, test))
}

/// Expected accuracy of proportional random guessing: `sum p_c^2`.
pub fn expected_baseline_accuracy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    counts.iter().map(|&c| (c as f64 / n as f64).powi(2)).sum()
}

/// One i.i.d. draw per test sample from the training class distribution.
pub fn baseline_proportional(train_labels: &[usize], test_labels: &[usize], seed: u64) -> Vec<usize> {
    if train_labels.is_empty() {
        return vec![0; test_labels.len()];
    }
    let mut rng = rng_from_seed(seed);
    (0..test_labels.len()).map(|_| train_labels[rng.random_range(0..train_labels.len())]).collect()
}

fn check_trainable(ds: &LabeledDataset, task: Task) -> Result<Vec<usize>> {
    let y = ds.y(task);
    let mut present = vec![false; task.n_classes()];
    for &c in &y {
        present[c] = true;
    }
    if present.iter().filter(|p| **p).count() < 2 {
        return Err(Error::DegenerateTraining(format!("{task} training set has fewer than two classes")));
    }
    Ok(y)
}

fn shell(ds: &LabeledDataset, kind: ModelKind, task: Task, hp: &Hyperparams, seed: u64) -> EnsembleModel {
    EnsembleModel {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        task,
        schema_version: SCHEMA_VERSION.to_owned(),
        feature_count: ds.n_features,
        n_classes: task.n_classes(),
        hyperparams: *hp,
        seed,
        validation_f1: None,
        training_loss: Vec::new(),
        window: ds.window,
        init: Vec::new(),
        trees: Vec::new(),
    }
}

pub fn default_max_features(n_features: usize) -> usize {
    ((n_features as f64).sqrt().round() as usize).max(1)
}

pub fn train_rf(ds: &LabeledDataset, task: Task, hp: &Hyperparams, seed: u64) -> Result<EnsembleModel> {
    let y = check_trainable(ds, task)?;
    let mut hp = *hp;
    hp.learning_rate = None;
    let max_features = hp.max_features.unwrap_or_else(|| default_max_features(ds.n_features)).clamp(1, ds.n_features);
    hp.max_features = Some(max_features);
    let x = BinnedMatrix::build(&ds.x, ds.n_features, RF_BINS);
    let params = forest::ForestParams {
        n_trees: hp.n_trees.max(1),
        max_depth: hp.max_depth,
        min_leaf: hp.min_leaf.max(1),
        max_features,
    };
    let mut m = shell(ds, ModelKind::Rf, task, &hp, seed);
    m.trees = vec![forest::fit_forest(&x, &y, task.n_classes(), params, seed)];
    Ok(m)
}

pub fn train_gb(ds: &LabeledDataset, task: Task, hp: &Hyperparams, seed: u64) -> Result<EnsembleModel> {
    let y = check_trainable(ds, task)?;
    let mut hp = *hp;
    hp.max_features = None;
    let lr = hp.learning_rate.unwrap_or(0.1);
    hp.learning_rate = Some(lr);
    let x = BinnedMatrix::build(&ds.x, ds.n_features, GB_BINS);
    let params = boost::BoostParams { n_trees: hp.n_trees, max_depth: hp.max_depth, min_leaf: hp.min_leaf.max(1), learning_rate: lr };
    let k = task.n_classes();
    let targets: Vec<Vec<bool>> = if k == 2 {
        vec![y.iter().map(|&c| c == 1).collect()]
    } else {
        (0..k).map(|cls| y.iter().map(|&c| c == cls).collect()).collect()
    };
    let boosters: Vec<boost::Booster> = targets.iter().map(|t| boost::fit_booster(&x, t, &params)).collect();
    let mut m = shell(ds, ModelKind::Gb, task, &hp, seed);
    let rounds = boosters[0].loss.len();
    m.training_loss = (0..rounds).map(|r| boosters.iter().map(|b| b.loss[r]).sum()).collect();
    m.init = boosters.iter().map(|b| b.init).collect();
    m.trees = boosters.into_iter().map(|b| b.trees).collect();
    Ok(m)
}

pub fn train(ds: &LabeledDataset, kind: ModelKind, task: Task, hp: &Hyperparams, seed: u64) -> Result<EnsembleModel> {
    match kind {
        ModelKind::Rf => train_rf(ds, task, hp, seed),
        ModelKind::Gb => train_gb(ds, task, hp, seed),
    }
}

#[cfg(test)]
mod tests;
