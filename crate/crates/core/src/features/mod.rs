//! Hand-crafted temporal features over a seasonal window.
//!
//! Each ingested band is smoothed, spline-interpolated and resampled onto the
//! window grid. VV, VH and their dB difference contribute the positions and
//! amplitudes of their first troughs, crests and inflection points plus summary
//! statistics; the difference band also gets a Gaussian bump fit, and the radar
//! vegetation index contributes summary statistics only.

mod extrema;
mod gaussian;
mod io;

pub use extrema::{find_extrema, find_inflections, Extrema, ExtremumFeature, ExtremumKind, DEFAULT_K, SENTINEL};
pub use gaussian::{fit_gaussian, GaussianFit, GaussianFitParams};
pub use io::{read_features_csv, write_features_csv, FeatureRow, FEATURE_META_COLUMNS};

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{
    derive_ratio, derive_rvi, fit_spline, resample, smooth, Acquisition, Band, Day, PlotSeries, ResampledSeries,
    DEFAULT_SMOOTHING_SIGMA, SEASON_END_DAY,
};

pub const SCHEMA_VERSION: &str = "hc76-v1";
pub const FEATURE_COUNT: usize = 76;
pub const ALLOWED_STEPS: [Day; 3] = [4, 7, 10];
pub const DEFAULT_STEP: Day = 7;

const EXTREMUM_BANDS: [Band; 3] = [Band::Vv, Band::Vh, Band::Ratio];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TemporalWindow {
    pub start_day: Day,
    pub end_day: Day,
    pub step_days: Day,
}

impl TemporalWindow {
    pub fn new(start_day: Day, end_day: Day, step_days: Day) -> Result<Self> {
        if start_day >= end_day {
            return Err(Error::Window(format!("start {start_day} must precede end {end_day}")));
        }
        if start_day < 0 || end_day > SEASON_END_DAY {
            return Err(Error::Window(format!("window [{start_day}, {end_day}] leaves the season [0, {SEASON_END_DAY}]")));
        }
        if !ALLOWED_STEPS.contains(&step_days) {
            return Err(Error::Window(format!("step must be one of {ALLOWED_STEPS:?}, got {step_days}")));
        }
        Ok(Self { start_day, end_day, step_days })
    }

    pub fn full_season(step_days: Day) -> Result<Self> {
        Self::new(0, SEASON_END_DAY, step_days)
    }

    pub fn len(&self) -> usize {
        crate::timeseries::grid_len(self.start_day, self.end_day, self.step_days)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

}

impl std::fmt::Display for TemporalWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}/{}", day_label(self.start_day), day_label(self.end_day), self.step_days)
    }
}

const MONTHS: [(&str, Day); 8] =
    [("May", 0), ("Jun", 31), ("Jul", 61), ("Aug", 92), ("Sep", 123), ("Oct", 153), ("Nov", 184), ("Dec", 214)];

/// `Mon D` label for a season day offset.
pub fn day_label(day: Day) -> String {
    match MONTHS.iter().rev().find(|(_, s)| day >= *s) {
        Some((m, s)) => format!("{m} {}", day - s + 1),
        None => format!("day {day}"),
    }
}

/// The twelve candidate seasonal windows, as `(start, end)` day offsets.
pub const PRESET_SPANS: [(Day, Day); 12] = [
    (0, 106),
    (31, 121),
    (31, 137),
    (31, 167),
    (61, 167),
    (92, 167),
    (92, 198),
    (123, 228),
    (153, 228),
    (92, 228),
    (31, 228),
    (0, 228),
];

pub fn preset_windows(step_days: Day) -> Result<Vec<TemporalWindow>> {
    PRESET_SPANS.iter().map(|&(s, e)| TemporalWindow::new(s, e, step_days)).collect()
}

/// Ordered feature names for the current schema version.
pub fn feature_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let mut names = Vec::with_capacity(FEATURE_COUNT);
        for band in EXTREMUM_BANDS {
            for kind in ["trough", "crest", "infl"] {
                for k in 1..=DEFAULT_K {
                    names.push(format!("{band}_{kind}{k}_t"));
                    names.push(format!("{band}_{kind}{k}_amp"));
                }
            }
            for stat in ["trough_count", "crest_count", "mean", "min", "max"] {
                names.push(format!("{band}_{stat}"));
            }
        }
        for p in ["amp", "peak_day", "sigma", "r2"] {
            names.push(format!("RATIO_gauss_{p}"));
        }
        for stat in ["mean", "min", "max"] {
            names.push(format!("RVI_{stat}"));
        }
        debug_assert_eq!(names.len(), FEATURE_COUNT);
        names
    })
}

pub fn feature_index(name: &str) -> Option<usize> {
    feature_names().iter().position(|n| n == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub plot_id: String,
    pub window: TemporalWindow,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }
}

fn stats(values: &[f64]) -> [f64; 3] {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [mean, min, max]
}

fn push_pair(out: &mut Vec<f64>, f: &ExtremumFeature) {
    out.push(f.t_rel);
    out.push(f.amplitude);
}

/// Smooth, interpolate and resample one ingested band onto the window grid.
pub fn preprocess_band(acqs: &[Acquisition], band: Band, window: &TemporalWindow) -> Result<ResampledSeries> {
    let raw: Vec<f64> = acqs.iter().map(|a| a.value_db).collect();
    let smoothed = smooth(&raw, DEFAULT_SMOOTHING_SIGMA)?;
    let pts = acqs.iter().zip(smoothed).map(|(a, v)| Acquisition::new(a.day, v)).collect::<Result<Vec<_>>>()?;
    let spline = fit_spline(&pts)?;
    resample(&spline, band, window.start_day, window.end_day, window.step_days)
}

/// Compute the fixed-schema feature vector of one plot. Labels and planting
/// dates are never read.
pub fn extract_features(plot: &PlotSeries, window: &TemporalWindow) -> Result<FeatureVector> {
    TemporalWindow::new(window.start_day, window.end_day, window.step_days)?;
    let band_series = |band: Band| -> Result<ResampledSeries> {
        let acqs = plot
            .band(band)
            .ok_or_else(|| Error::InvalidSeries(format!("plot {} lacks band {band}", plot.plot_id())))?;
        preprocess_band(acqs, band, window)
    };
    let vv = band_series(Band::Vv)?;
    let vh = band_series(Band::Vh)?;
    let ratio = derive_ratio(&vv, &vh)?;
    let rvi = derive_rvi(&vv, &vh)?;

    let mut values = Vec::with_capacity(FEATURE_COUNT);
    for s in [&vv, &vh, &ratio] {
        let ex = find_extrema(s, DEFAULT_K);
        let infl = find_inflections(s, DEFAULT_K);
        for f in ex.troughs.iter().chain(&ex.crests).chain(&infl) {
            push_pair(&mut values, f);
        }
        values.push(ex.trough_count as f64);
        values.push(ex.crest_count as f64);
        values.extend(stats(&s.values));
    }
    match fit_gaussian(&ratio) {
        Ok(fit) => {
            let p = fit.params;
            if !fit.converged {
                log::debug!("plot {}: gaussian fit stopped after {} iterations", plot.plot_id(), fit.iterations);
            }
            values.extend([p.amplitude, p.peak_day, p.sigma_days, p.r_squared]);
        }
        Err(Error::DegenerateFit(_)) => values.extend([SENTINEL, SENTINEL, SENTINEL, 0.0]),
        Err(e) => return Err(e),
    }
    values.extend(stats(&rvi.values));
    debug_assert_eq!(values.len(), FEATURE_COUNT);
    Ok(FeatureVector { plot_id: plot.plot_id().to_owned(), window: *window, values })
}
