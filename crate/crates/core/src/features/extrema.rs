use serde::{Deserialize, Serialize};

use crate::timeseries::ResampledSeries;

/// Marker for absent features.
pub const SENTINEL: f64 = -9999.0;
pub const DEFAULT_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremumKind {
    Trough,
    Crest,
    Inflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremumFeature {
    pub kind: ExtremumKind,
    pub t_rel: f64,
    pub amplitude: f64,
    pub present: bool,
}

impl ExtremumFeature {
    fn at(kind: ExtremumKind, s: &ResampledSeries, i: usize) -> Self {
        Self { kind, t_rel: s.t_rel(i), amplitude: s.values[i], present: true }
    }

    pub fn absent(kind: ExtremumKind) -> Self {
        Self { kind, t_rel: SENTINEL, amplitude: SENTINEL, present: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extrema {
    pub troughs: Vec<ExtremumFeature>,
    pub crests: Vec<ExtremumFeature>,
    pub trough_count: usize,
    pub crest_count: usize,
}

fn pad(mut v: Vec<ExtremumFeature>, k: usize, kind: ExtremumKind) -> Vec<ExtremumFeature> {
    v.truncate(k);
    v.resize(k, ExtremumFeature::absent(kind));
    v
}

fn tolerance(v: &[f64]) -> f64 {
    1e-9 * v.iter().fold(1.0f64, |m, x| m.max(x.abs()))
}

/// Interior strict local minima and maxima. A plateau counts once, at its
/// first index, when both neighbours lie on the same side of it. Differences
/// within rounding noise count as equal.
pub fn find_extrema(series: &ResampledSeries, k: usize) -> Extrema {
    let v = &series.values;
    let n = v.len();
    let tol = tolerance(v);
    let (mut troughs, mut crests) = (Vec::new(), Vec::new());
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && (v[end + 1] - v[start]).abs() <= tol {
            end += 1;
        }
        if start > 0 && end + 1 < n {
            let (left, right, x) = (v[start - 1], v[end + 1], v[start]);
            if left > x + tol && right > x + tol {
                troughs.push(ExtremumFeature::at(ExtremumKind::Trough, series, start));
            } else if left < x - tol && right < x - tol {
                crests.push(ExtremumFeature::at(ExtremumKind::Crest, series, start));
            }
        }
        start = end + 1;
    }
    let (trough_count, crest_count) = (troughs.len(), crests.len());
    Extrema {
        troughs: pad(troughs, k, ExtremumKind::Trough),
        crests: pad(crests, k, ExtremumKind::Crest),
        trough_count,
        crest_count,
    }
}

/// Sign changes of the discrete second difference, reported at the left
/// sample of each change. Differences within rounding noise of zero are
/// ignored so that linear stretches do not produce spurious changes.
pub fn find_inflections(series: &ResampledSeries, k: usize) -> Vec<ExtremumFeature> {
    let v = &series.values;
    let tol = tolerance(v);
    let mut out = Vec::new();
    let mut last: Option<(usize, bool)> = None;
    for i in 1..v.len().saturating_sub(1) {
        let d2 = v[i - 1] - 2.0 * v[i] + v[i + 1];
        if d2.abs() <= tol {
            continue;
        }
        let positive = d2 > 0.0;
        if let Some((j, prev)) = last {
            if prev != positive {
                out.push(ExtremumFeature::at(ExtremumKind::Inflection, series, j));
            }
        }
        last = Some((i, positive));
    }
    pad(out, k, ExtremumKind::Inflection)
}
