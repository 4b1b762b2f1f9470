//! Streaming batch inference over large plot sets, modal voting across an
//! ensemble of models and district-level aggregation.
//!
//! The pipeline is a producer thread feeding a bounded job channel, a pool
//! of extract-and-predict workers, and the calling thread acting as the
//! single consumer. Results are released in input order through a reorder
//! buffer, so output never depends on the worker count.

mod records;

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use crossbeam_channel::bounded;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureVector, TemporalWindow};
use crate::learn::{EnsembleModel, Task};
use crate::timeseries::PlotSeries;

pub use records::{
    compare_records, read_records_csv, write_paired_csv, write_records_csv, write_scatter_data, ComparisonReport,
    PairedDistrict, RecordsTable, SQ_METERS_PER_ACRE,
};

pub const PREDICTION_HEADER: [&str; 5] = ["plot_id", "district", "area_m2", "predicted_class", "score"];
pub const DISTRICT_HEADER: [&str; 5] = ["district", "n_plots", "n_positive", "positive_area_m2", "positive_acres"];

/// Models voting together. All members share one task and feature schema.
#[derive(Debug, Clone)]
pub struct Ensemble {
    models: Vec<EnsembleModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vote {
    pub class: usize,
    /// Mean probability of the chosen class across members.
    pub score: f64,
}

impl Ensemble {
    pub fn new(models: Vec<EnsembleModel>) -> Result<Self> {
        let first = models.first().ok_or_else(|| Error::Input("ensemble needs at least one model".into()))?;
        for m in &models {
            m.check_schema()?;
            if m.task != first.task {
                return Err(Error::Input(format!("ensemble mixes tasks {} and {}", first.task, m.task)));
            }
        }
        Ok(Self { models })
    }

    pub fn task(&self) -> Task {
        self.models[0].task
    }

    pub fn models(&self) -> &[EnsembleModel] {
        &self.models
    }

    /// Modal class across members. A tie between classes is settled by the
    /// member with the highest stored validation F1 among those voting for a
    /// tied class; models without a score rank last, then earlier wins.
    pub fn vote(&self, fv: &FeatureVector) -> Result<Vote> {
        let n = self.task().n_classes();
        let preds = self.models.iter().map(|m| m.predict(fv)).collect::<Result<Vec<_>>>()?;
        let mut counts = vec![0usize; n];
        for p in &preds {
            counts[p.class] += 1;
        }
        let top = counts.iter().copied().max().unwrap_or(0);
        let class = if counts.iter().filter(|&&c| c == top).count() == 1 {
            counts.iter().position(|&c| c == top).unwrap()
        } else {
            let f1 = |i: usize| self.models[i].validation_f1.unwrap_or(f64::NEG_INFINITY);
            let best = (0..preds.len())
                .filter(|&i| counts[preds[i].class] == top)
                .fold(None, |b: Option<usize>, i| match b {
                    Some(j) if f1(j) >= f1(i) => Some(j),
                    _ => Some(i),
                })
                .unwrap();
            preds[best].class
        };
        let score = preds.iter().map(|p| p.scores[class]).sum::<f64>() / preds.len() as f64;
        Ok(Vote { class, score })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPrediction {
    pub plot_id: String,
    pub district: String,
    pub area_m2: f64,
    pub class: usize,
    pub score: f64,
}

/// A plot that could not be predicted. Ingestion failures carry the input
/// sequence number in place of a plot id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub plot_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotOutcome {
    Predicted(PlotPrediction),
    Failed(ErrorEntry),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchStats {
    pub predicted: usize,
    pub failed: usize,
}

fn process(ensemble: &Ensemble, window: &TemporalWindow, item: Result<PlotSeries>, seq: u64) -> PlotOutcome {
    let plot = match item {
        Ok(p) => p,
        Err(e) => return PlotOutcome::Failed(ErrorEntry { plot_id: format!("#{seq}"), error: e.to_string() }),
    };
    match extract_features(&plot, window).and_then(|fv| ensemble.vote(&fv)) {
        Ok(v) => PlotOutcome::Predicted(PlotPrediction {
            plot_id: plot.plot_id().to_string(),
            district: plot.district().to_string(),
            area_m2: plot.area_m2(),
            class: v.class,
            score: v.score,
        }),
        Err(e) => PlotOutcome::Failed(ErrorEntry { plot_id: plot.plot_id().to_string(), error: e.to_string() }),
    }
}

/// Runs extraction and voting over `plots` on `workers` threads and hands
/// every outcome to `sink` in input order. Per-plot failures are passed to
/// the sink and never stop the batch; an error returned by the sink does.
/// At most a few multiples of `workers` plots are in flight at any time.
pub fn batch_predict<I, F>(ensemble: &Ensemble, plots: I, window: &TemporalWindow, workers: usize, mut sink: F) -> Result<BatchStats>
where
    I: IntoIterator<Item = Result<PlotSeries>> + Send,
    I::IntoIter: Send,
    F: FnMut(PlotOutcome) -> Result<()>,
{
    let workers = workers.max(1);
    for m in ensemble.models() {
        if m.window.is_some_and(|w| w != *window) {
            log::warn!("model {} was trained on a different window than the batch window {window}", m.kind);
        }
    }
    let (job_tx, job_rx) = bounded::<(u64, Result<PlotSeries>)>(2 * workers);
    let (out_tx, out_rx) = bounded::<(u64, PlotOutcome)>(2 * workers);
    std::thread::scope(|s| -> Result<BatchStats> {
        // Owned by the consumer so that an early return hangs up on the workers.
        let out_rx = out_rx;
        s.spawn(move || {
            for (seq, item) in (0u64..).zip(plots) {
                if job_tx.send((seq, item)).is_err() {
                    break;
                }
            }
        });
        for _ in 0..workers {
            let (rx, tx) = (job_rx.clone(), out_tx.clone());
            s.spawn(move || {
                for (seq, item) in rx {
                    if tx.send((seq, process(ensemble, window, item, seq))).is_err() {
                        break;
                    }
                }
            });
        }
        drop((job_rx, out_tx));

        let mut stats = BatchStats::default();
        let mut pending = BTreeMap::new();
        let mut next = 0u64;
        for (seq, outcome) in out_rx.iter() {
            pending.insert(seq, outcome);
            while let Some(outcome) = pending.remove(&next) {
                match &outcome {
                    PlotOutcome::Predicted(_) => stats.predicted += 1,
                    PlotOutcome::Failed(e) => {
                        log::warn!("plot {}: {}", e.plot_id, e.error);
                        stats.failed += 1;
                    }
                }
                sink(outcome)?;
                next += 1;
            }
        }
        Ok(stats)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistrictSummary {
    pub district: String,
    pub n_plots: usize,
    pub n_positive: usize,
    pub positive_area_m2: f64,
}

impl DistrictSummary {
    pub fn positive_acres(&self) -> f64 {
        self.positive_area_m2 / SQ_METERS_PER_ACRE
    }

    pub fn positive_rate(&self) -> f64 {
        if self.n_plots == 0 {
            0.0
        } else {
            self.n_positive as f64 / self.n_plots as f64
        }
    }
}

/// Incremental per-district tally, fed by the single consumer of a batch.
#[derive(Debug, Clone, Default)]
pub struct DistrictAggregator {
    positive_class: usize,
    districts: HashMap<String, DistrictSummary>,
}

impl DistrictAggregator {
    pub fn new(positive_class: usize) -> Self {
        Self { positive_class, districts: HashMap::new() }
    }

    pub fn add(&mut self, p: &PlotPrediction) {
        let d = self.districts.entry(p.district.clone()).or_insert_with(|| DistrictSummary {
            district: p.district.clone(),
            n_plots: 0,
            n_positive: 0,
            positive_area_m2: 0.0,
        });
        d.n_plots += 1;
        if p.class == self.positive_class {
            d.n_positive += 1;
            d.positive_area_m2 += p.area_m2;
        }
    }

    /// Summaries by positive area, largest first; ties by district name.
    pub fn finish(self) -> Vec<DistrictSummary> {
        let mut out: Vec<DistrictSummary> = self.districts.into_values().collect();
        out.sort_by(|a, b| b.positive_area_m2.total_cmp(&a.positive_area_m2).then_with(|| a.district.cmp(&b.district)));
        out
    }
}

pub fn aggregate_districts<'a>(predictions: impl IntoIterator<Item = &'a PlotPrediction>, positive_class: usize) -> Vec<DistrictSummary> {
    let mut agg = DistrictAggregator::new(positive_class);
    for p in predictions {
        agg.add(p);
    }
    agg.finish()
}

/// Streaming writer for the predictions CSV; class indices are written as
/// the task's class names.
pub struct PredictionWriter<W: Write> {
    inner: csv::Writer<W>,
    task: Task,
}

impl<W: Write> PredictionWriter<W> {
    pub fn new(writer: W, task: Task) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(PREDICTION_HEADER)?;
        Ok(Self { inner, task })
    }

    pub fn write(&mut self, p: &PlotPrediction) -> Result<()> {
        self.inner.write_record([
            p.plot_id.as_str(),
            p.district.as_str(),
            &p.area_m2.to_string(),
            self.task.class_name(p.class),
            &format!("{:.6}", p.score),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

#[derive(Debug, Deserialize)]
struct PredictionRow {
    plot_id: String,
    district: String,
    area_m2: f64,
    predicted_class: String,
    score: f64,
}

pub fn read_predictions_csv<R: Read>(reader: R, task: Task) -> Result<Vec<PlotPrediction>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<PredictionRow>() {
        let row = row?;
        let class = task
            .class_names()
            .iter()
            .position(|c| c.eq_ignore_ascii_case(&row.predicted_class))
            .ok_or_else(|| Error::Input(format!("class {:?} is not a {} class", row.predicted_class, task)))?;
        out.push(PlotPrediction { plot_id: row.plot_id, district: row.district, area_m2: row.area_m2, class, score: row.score });
    }
    Ok(out)
}

pub fn write_errors_csv<'a, W: Write>(writer: W, errors: impl IntoIterator<Item = &'a ErrorEntry>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["plot_id", "error"])?;
    for e in errors {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_districts_csv<W: Write>(writer: W, summaries: &[DistrictSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DISTRICT_HEADER)?;
    for s in summaries {
        w.write_record([
            s.district.clone(),
            s.n_plots.to_string(),
            s.n_positive.to_string(),
            format!("{:.3}", s.positive_area_m2),
            format!("{:.6}", s.positive_acres()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct DistrictRow {
    district: String,
    n_plots: usize,
    n_positive: usize,
    positive_area_m2: f64,
}

pub fn read_districts_csv<R: Read>(reader: R) -> Result<Vec<DistrictSummary>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    rdr.deserialize::<DistrictRow>()
        .map(|r| {
            let r = r?;
            if r.n_positive > r.n_plots || !(r.positive_area_m2 >= 0.0) {
                return Err(Error::Input(format!("inconsistent district row for {}", r.district)));
            }
            Ok(DistrictSummary { district: r.district, n_plots: r.n_plots, n_positive: r.n_positive, positive_area_m2: r.positive_area_m2 })
        })
        .collect()
}
