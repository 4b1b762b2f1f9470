use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::boost::{booster_score, sigmoid};
use super::forest::forest_scores;
use super::tree::Tree;
use super::Task;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, TemporalWindow, FEATURE_COUNT, SCHEMA_VERSION};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rf,
    Gb,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rf => "rf",
            ModelKind::Gb => "gb",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" => Ok(ModelKind::Rf),
            "gb" => Ok(ModelKind::Gb),
            _ => Err(Error::Input(format!("unknown model kind {s:?}, expected rf or gb"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Boosting shrinkage; unused by forests.
    pub learning_rate: Option<f64>,
    /// Features tried per forest split; defaults to `round(sqrt(n_features))`.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
}

/// A trained tree ensemble. Forests keep one tree group whose leaves hold
/// class indices; boosters keep one group of logit trees per output (a single
/// group for binary tasks, one per class for one-vs-rest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub task: Task,
    pub schema_version: String,
    pub feature_count: usize,
    pub n_classes: usize,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub validation_f1: Option<f64>,
    pub training_loss: Vec<f64>,
    pub window: Option<TemporalWindow>,
    pub init: Vec<f64>,
    pub trees: Vec<Vec<Tree>>,
}

fn argmax(scores: &[f64]) -> usize {
    (0..scores.len()).fold(0, |b, c| if scores[c] > scores[b] { c } else { b })
}

impl EnsembleModel {
    pub fn n_trees(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    /// Class scores summing to one and the argmax class (lowest index on ties).
    pub fn predict_row(&self, row: &[f64]) -> Prediction {
        let scores = match self.kind {
            ModelKind::Rf => forest_scores(&self.trees[0], self.n_classes, row),
            ModelKind::Gb if self.trees.len() == 1 => {
                let p = sigmoid(booster_score(self.init[0], &self.trees[0], row));
                vec![1.0 - p, p]
            }
            ModelKind::Gb => {
                let raw: Vec<f64> =
                    self.trees.iter().zip(&self.init).map(|(ts, &i)| booster_score(i, ts, row)).collect();
                let m = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = raw.iter().map(|r| (r - m).exp()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|v| v / s).collect()
            }
        };
        Prediction { class: argmax(&scores), scores }
    }

    pub fn check_schema(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION || self.feature_count != FEATURE_COUNT {
            return Err(Error::Schema {
                expected: format!("{SCHEMA_VERSION} ({FEATURE_COUNT} features)"),
                found: format!("{} ({} features)", self.schema_version, self.feature_count),
            });
        }
        Ok(())
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<Prediction> {
        self.check_schema()?;
        if fv.values.len() != self.feature_count {
            return Err(Error::Schema {
                expected: format!("{} features", self.feature_count),
                found: format!("{} features", fv.values.len()),
            });
        }
        Ok(self.predict_row(&fv.values))
    }

    fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Input(format!("unsupported model format version {}", self.format_version)));
        }
        if self.n_classes != self.task.n_classes() {
            return Err(Error::Input("model class count does not match its task".into()));
        }
        let expected_groups = match self.kind {
            ModelKind::Rf => 1,
            ModelKind::Gb if self.n_classes == 2 => 1,
            ModelKind::Gb => self.n_classes,
        };
        if self.trees.len() != expected_groups || (self.kind == ModelKind::Gb && self.init.len() != expected_groups) {
            return Err(Error::Input("model tree groups do not match its kind and task".into()));
        }
        for t in self.trees.iter().flatten() {
            if t.max_feature_index().is_some_and(|f| f >= self.feature_count) {
                return Err(Error::Input("tree splits on a feature outside the schema".into()));
            }
            let n = t.n_nodes();
            if n == 0 || t.threshold.len() != n || t.left.len() != n || t.right.len() != n || t.value.len() != n * t.n_outputs {
                return Err(Error::Input("malformed tree arrays".into()));
            }
            if t.feature.iter().enumerate().any(|(i, f)| *f >= 0 && (t.left[i] as usize >= n || t.right[i] as usize >= n)) {
                return Err(Error::Input("tree child index out of range".into()));
            }
        }
        Ok(())
    }

    pub fn to_writer<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.to_writer(&mut buf).expect("in-memory write");
        buf
    }

    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let m: Self = serde_json::from_reader(r)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.to_writer(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }
}
