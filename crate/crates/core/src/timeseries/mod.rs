//! Plot time series and the preprocessing chain applied to them.
//!
//! Backscatter is kept in dB throughout. Each ingested band is smoothed with
//! a small discrete Gaussian (in units of acquisitions), interpolated with a
//! natural cubic spline through the smoothed points, and sampled on a regular
//! day grid. The VV/VH ratio (a difference in dB) and the radar vegetation
//! index are derived from the resampled VV and VH grids.
//!
//! Day offsets count from the season origin, May 1.

mod io;
mod spline;

pub use io::{read_labels_csv, write_labels_csv, write_series_csv, LabelRecord, SeriesCsvReader};
pub use spline::{fit_spline, CubicSpline};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Day offset from May 1.
pub type Day = i32;

/// Last day of the season (December 15).
pub const SEASON_END_DAY: Day = 228;

/// Gaps between consecutive acquisitions longer than this raise a warning flag.
pub const GAP_WARNING_DAYS: Day = 30;

/// Default Gaussian smoothing width, in acquisitions.
pub const DEFAULT_SMOOTHING_SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Band {
    Vv,
    Vh,
    /// VV minus VH in dB.
    Ratio,
    /// Radar vegetation index, computed in linear power.
    Rvi,
}

impl Band {
    pub const INGESTED: [Band; 2] = [Band::Vv, Band::Vh];

    pub fn is_derived(self) -> bool {
        matches!(self, Band::Ratio | Band::Rvi)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Band::Vv => "VV",
            Band::Vh => "VH",
            Band::Ratio => "RATIO",
            Band::Rvi => "RVI",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "VV" => Ok(Band::Vv),
            "VH" => Ok(Band::Vh),
            "RATIO" => Ok(Band::Ratio),
            "RVI" => Ok(Band::Rvi),
            other => Err(Error::Input(format!("unknown band '{other}'"))),
        }
    }
}

/// The three practice classes collected on the ground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PracticeLabel {
    /// Puddled transplanting with continuous flooding.
    Control,
    /// Direct seeded rice with continuous flooding.
    Dsr,
    /// Puddled transplanting with alternate wetting and drying.
    Awd,
}

impl PracticeLabel {
    pub const ALL: [PracticeLabel; 3] = [PracticeLabel::Control, PracticeLabel::Dsr, PracticeLabel::Awd];

    pub fn as_str(self) -> &'static str {
        match self {
            PracticeLabel::Control => "CONTROL",
            PracticeLabel::Dsr => "DSR",
            PracticeLabel::Awd => "AWD",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PracticeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PracticeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CONTROL" | "PTR+CF" => Ok(PracticeLabel::Control),
            "DSR" | "DSR+CF" => Ok(PracticeLabel::Dsr),
            "AWD" | "PTR+AWD" => Ok(PracticeLabel::Awd),
            other => Err(Error::Input(format!("unknown practice label '{other}'"))),
        }
    }
}

/// One backscatter observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    pub day: Day,
    pub value_db: f64,
}

impl Acquisition {
    pub fn new(day: Day, value_db: f64) -> Result<Self> {
        if day < 0 {
            return Err(Error::InvalidSeries(format!("negative day offset {day}")));
        }
        if !value_db.is_finite() {
            return Err(Error::InvalidSeries(format!("non-finite value at day {day}")));
        }
        Ok(Self { day, value_db })
    }
}

/// Multi-band backscatter series of one plot.
///
/// Only VV and VH are ingested. All ingested bands share one timestamp set
/// and timestamps are strictly increasing. `planting_day` is metadata for
/// evaluation and is never read by feature extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    plot_id: String,
    district: String,
    area_m2: f64,
    bands: BTreeMap<Band, Vec<Acquisition>>,
    pub label: Option<PracticeLabel>,
    pub planting_day: Option<Day>,
}

impl PlotSeries {
    pub fn new(
        plot_id: impl Into<String>,
        district: impl Into<String>,
        area_m2: f64,
        bands: BTreeMap<Band, Vec<Acquisition>>,
    ) -> Result<Self> {
        let plot_id = plot_id.into();
        if !(area_m2 > 0.0 && area_m2.is_finite()) {
            return Err(Error::InvalidSeries(format!("plot {plot_id}: area must be positive, got {area_m2}")));
        }
        let mut reference: Option<Vec<Day>> = None;
        for (band, acqs) in &bands {
            if band.is_derived() {
                return Err(Error::InvalidSeries(format!("plot {plot_id}: band {band} is derived and cannot be ingested")));
            }
            for w in acqs.windows(2) {
                if w[1].day <= w[0].day {
                    return Err(Error::InvalidSeries(format!(
                        "plot {plot_id}: {band} timestamps not strictly increasing at day {}",
                        w[1].day
                    )));
                }
            }
            for a in acqs {
                Acquisition::new(a.day, a.value_db)?;
            }
            let days: Vec<Day> = acqs.iter().map(|a| a.day).collect();
            match &reference {
                None => reference = Some(days),
                Some(r) if *r != days => {
                    return Err(Error::InvalidSeries(format!("plot {plot_id}: bands do not share timestamps")));
                }
                Some(_) => {}
            }
        }
        Ok(Self { plot_id, district: district.into(), area_m2, bands, label: None, planting_day: None })
    }

    pub fn with_label(mut self, label: PracticeLabel, planting_day: Option<Day>) -> Self {
        self.label = Some(label);
        self.planting_day = planting_day;
        self
    }

    pub fn plot_id(&self) -> &str {
        &self.plot_id
    }

    pub fn district(&self) -> &str {
        &self.district
    }

    pub fn area_m2(&self) -> f64 {
        self.area_m2
    }

    pub fn band(&self, band: Band) -> Option<&[Acquisition]> {
        self.bands.get(&band).map(Vec::as_slice)
    }

    pub fn bands(&self) -> impl Iterator<Item = (Band, &[Acquisition])> {
        self.bands.iter().map(|(b, a)| (*b, a.as_slice()))
    }

    pub fn days(&self) -> Vec<Day> {
        self.bands.values().next().map(|a| a.iter().map(|x| x.day).collect()).unwrap_or_default()
    }

    /// Largest spacing between consecutive acquisitions, in days.
    pub fn max_gap_days(&self) -> Day {
        self.days().windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// True when some gap exceeds [`GAP_WARNING_DAYS`]; the spline still bridges it.
    pub fn gap_warning(&self) -> bool {
        self.max_gap_days() > GAP_WARNING_DAYS
    }

    /// Copy with every timestamp moved by `delta` days.
    pub fn shifted(&self, delta: Day) -> Result<Self> {
        let bands = self
            .bands
            .iter()
            .map(|(b, acqs)| {
                let moved = acqs.iter().map(|a| Acquisition::new(a.day + delta, a.value_db)).collect::<Result<Vec<_>>>()?;
                Ok((*b, moved))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        let mut out = PlotSeries::new(self.plot_id.clone(), self.district.clone(), self.area_m2, bands)?;
        out.label = self.label;
        out.planting_day = self.planting_day.map(|d| d + delta);
        Ok(out)
    }
}

/// A band sampled on a regular day grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampledSeries {
    pub band: Band,
    pub start_day: Day,
    pub end_day: Day,
    pub step_days: Day,
    pub values: Vec<f64>,
}

impl ResampledSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Days since the window start of sample `i`.
    pub fn t_rel(&self, i: usize) -> f64 {
        (i as Day * self.step_days) as f64
    }

    fn same_grid(&self, other: &ResampledSeries) -> Result<()> {
        if self.start_day != other.start_day || self.step_days != other.step_days || self.values.len() != other.values.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid (start {}, step {}, n {}) vs {} grid (start {}, step {}, n {})",
                self.band,
                self.start_day,
                self.step_days,
                self.values.len(),
                other.band,
                other.start_day,
                other.step_days,
                other.values.len()
            )));
        }
        Ok(())
    }
}

/// Number of samples on the grid `start, start+step, ...` not exceeding `end`.
pub fn grid_len(start: Day, end: Day, step: Day) -> usize {
    ((end - start) / step) as usize + 1
}

/// Discrete Gaussian smoothing.
///
/// The kernel is truncated at radius `ceil(4 sigma)` and renormalized over the
/// taps that fall inside the series, so constants are preserved at the edges.
pub fn smooth(values: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidSeries("cannot smooth an empty series".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Input(format!("smoothing sigma must be positive, got {sigma}")));
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let n = values.len() as isize;
    let out = (0..n)
        .map(|i| {
            // Offsets from the centre sample keep constant runs exact.
            let centre = values[i as usize];
            let mut acc = 0.0;
            let mut norm = 0.0;
            for (j, w) in (-radius..=radius).zip(&kernel) {
                let idx = i + j;
                if (0..n).contains(&idx) {
                    acc += w * (values[idx as usize] - centre);
                    norm += w;
                }
            }
            centre + acc / norm
        })
        .collect();
    Ok(out)
}

/// Sample `spline` every `step_days` from `start_day` up to `end_day`.
///
/// Samples outside the spline's domain take the nearest endpoint value. The
/// grid must intersect the domain and hold at least four samples.
pub fn resample(spline: &CubicSpline, band: Band, start_day: Day, end_day: Day, step_days: Day) -> Result<ResampledSeries> {
    if start_day >= end_day {
        return Err(Error::Window(format!("start day {start_day} must precede end day {end_day}")));
    }
    if step_days < 1 {
        return Err(Error::Window(format!("step must be positive, got {step_days}")));
    }
    let (lo, hi) = spline.domain();
    if (end_day as f64) < lo || (start_day as f64) > hi {
        return Err(Error::Window(format!(
            "window [{start_day}, {end_day}] does not intersect acquisitions [{lo}, {hi}]"
        )));
    }
    let n = grid_len(start_day, end_day, step_days);
    if n < 4 {
        return Err(Error::Window(format!("window [{start_day}, {end_day}] at step {step_days} yields {n} samples, need 4")));
    }
    let values = (0..n).map(|i| spline.eval((start_day + i as Day * step_days) as f64)).collect();
    Ok(ResampledSeries { band, start_day, end_day, step_days, values })
}

/// VV/VH ratio band: element-wise difference in dB.
pub fn derive_ratio(vv: &ResampledSeries, vh: &ResampledSeries) -> Result<ResampledSeries> {
    vv.same_grid(vh)?;
    Ok(ResampledSeries {
        band: Band::Ratio,
        start_day: vv.start_day,
        end_day: vv.end_day,
        step_days: vv.step_days,
        values: vv.values.iter().zip(&vh.values).map(|(a, b)| a - b).collect(),
    })
}

pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Radar vegetation index `4 p_vh / (p_vv + p_vh)` in linear power.
pub fn derive_rvi(vv: &ResampledSeries, vh: &ResampledSeries) -> Result<ResampledSeries> {
    vv.same_grid(vh)?;
    Ok(ResampledSeries {
        band: Band::Rvi,
        start_day: vv.start_day,
        end_day: vv.end_day,
        step_days: vv.step_days,
        values: vv
            .values
            .iter()
            .zip(&vh.values)
            .map(|(&a, &b)| {
                let (pv, ph) = (db_to_power(a), db_to_power(b));
                4.0 * ph / (pv + ph)
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(band: Band, start: Day, step: Day, values: Vec<f64>) -> ResampledSeries {
        let end = start + step * (values.len() as Day - 1);
        ResampledSeries { band, start_day: start, end_day: end, step_days: step, values }
    }

    #[test]
    fn smooth_preserves_constant() {
        assert_eq!(smooth(&[5.0; 5], 0.5).unwrap(), vec![5.0; 5]);
    }

    #[test]
    fn smooth_impulse_center() {
        // Hand oracle: weights exp(-2k^2) for k in -2..=2.
        let w: Vec<f64> = (-2i32..=2).map(|k| (-2.0 * (k * k) as f64).exp()).collect();
        let expected = 1.0 / w.iter().sum::<f64>();
        let out = smooth(&[0.0, 0.0, 1.0, 0.0, 0.0], 0.5).unwrap();
        assert_abs_diff_eq!(out[2], expected, epsilon = 1e-15);
        assert_abs_diff_eq!(out[2], 0.7866, epsilon = 1e-4);
    }

    #[test]
    fn smooth_single_and_empty() {
        assert_eq!(smooth(&[3.2], 0.5).unwrap(), vec![3.2]);
        assert!(matches!(smooth(&[], 0.5), Err(Error::InvalidSeries(_))));
        assert!(smooth(&[1.0], 0.0).is_err());
    }

    #[test]
    fn resample_grid_lengths() {
        let acqs: Vec<Acquisition> = (0..=19).map(|i| Acquisition::new(i * 12, i as f64).unwrap()).collect();
        let s = fit_spline(&acqs).unwrap();
        assert_eq!(resample(&s, Band::Vv, 0, 228, 12).unwrap().len(), 20);
        assert_eq!(resample(&s, Band::Vv, 31, 137, 4).unwrap().len(), 27);
        assert!(matches!(resample(&s, Band::Vv, 40, 40, 4), Err(Error::Window(_))));
        assert!(matches!(resample(&s, Band::Vv, 300, 400, 4), Err(Error::Window(_))));
    }

    #[test]
    fn resample_clamps_outside_domain() {
        let acqs: Vec<Acquisition> = (1..=6).map(|i| Acquisition::new(i * 10, i as f64).unwrap()).collect();
        let s = fit_spline(&acqs).unwrap();
        let r = resample(&s, Band::Vh, 0, 80, 10).unwrap();
        assert_eq!(r.values[0], 1.0);
        assert_eq!(*r.values.last().unwrap(), 6.0);
    }

    #[test]
    fn ratio_examples() {
        let r = derive_ratio(&grid(Band::Vv, 0, 7, vec![-8.0, -8.0]), &grid(Band::Vh, 0, 7, vec![-14.0, -14.0])).unwrap();
        assert_eq!(r.values, vec![6.0, 6.0]);
        assert_eq!(r.band, Band::Ratio);
        let same = derive_ratio(&grid(Band::Vv, 0, 7, vec![-3.0, 1.5]), &grid(Band::Vh, 0, 7, vec![-3.0, 1.5])).unwrap();
        assert!(same.values.iter().all(|&v| v == 0.0));
        let err = derive_ratio(&grid(Band::Vv, 0, 7, vec![1.0, 2.0]), &grid(Band::Vh, 0, 4, vec![1.0, 2.0]));
        assert!(matches!(err, Err(Error::GridMismatch(_))));
    }

    #[test]
    fn rvi_examples() {
        let vv_db = 10.0 * 0.2f64.log10();
        let vh_db = 10.0 * 0.05f64.log10();
        let r = derive_rvi(&grid(Band::Vv, 0, 4, vec![vv_db]), &grid(Band::Vh, 0, 4, vec![vh_db])).unwrap();
        assert_abs_diff_eq!(r.values[0], 0.8, epsilon = 1e-12);
        let eq = derive_rvi(&grid(Band::Vv, 0, 4, vec![-7.0, -12.0]), &grid(Band::Vh, 0, 4, vec![-7.0, -12.0])).unwrap();
        assert!(eq.values.iter().all(|&v| (v - 2.0).abs() < 1e-12));
        let tiny = derive_rvi(&grid(Band::Vv, 0, 4, vec![-5.0]), &grid(Band::Vh, 0, 4, vec![-90.0])).unwrap();
        assert!(tiny.values[0] < 1e-7);
        assert!(derive_rvi(&grid(Band::Vv, 0, 4, vec![1.0]), &grid(Band::Vh, 3, 4, vec![1.0])).is_err());
    }

    #[test]
    fn plot_series_invariants() {
        let ok = |d: &[Day]| d.iter().map(|&x| Acquisition::new(x, -10.0).unwrap()).collect::<Vec<_>>();
        let mut bands = BTreeMap::new();
        bands.insert(Band::Vv, ok(&[0, 12, 24]));
        bands.insert(Band::Vh, ok(&[0, 12, 30]));
        assert!(PlotSeries::new("p", "d", 100.0, bands.clone()).is_err());
        bands.insert(Band::Vh, ok(&[0, 12, 24]));
        assert!(PlotSeries::new("p", "d", 0.0, bands.clone()).is_err());
        let p = PlotSeries::new("p", "d", 100.0, bands.clone()).unwrap();
        assert!(!p.gap_warning());
        bands.insert(Band::Vv, ok(&[0, 12, 12]));
        assert!(PlotSeries::new("p", "d", 100.0, bands.clone()).is_err());
        let mut derived = BTreeMap::new();
        derived.insert(Band::Ratio, ok(&[0, 12]));
        assert!(PlotSeries::new("p", "d", 100.0, derived).is_err());
        let mut gappy = BTreeMap::new();
        gappy.insert(Band::Vv, ok(&[0, 12, 48]));
        assert!(PlotSeries::new("p", "d", 1.0, gappy).unwrap().gap_warning());
    }

    proptest! {
        #[test]
        fn smooth_bounded_and_shift_equivariant(values in prop::collection::vec(-30.0f64..5.0, 1..40), shift in -10.0f64..10.0) {
            let out = smooth(&values, 0.5).unwrap();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(out.len(), values.len());
            for v in &out {
                prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
            }
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            let out2 = smooth(&shifted, 0.5).unwrap();
            for (a, b) in out.iter().zip(&out2) {
                prop_assert!((a + shift - b).abs() < 1e-9);
            }
        }

        #[test]
        fn grid_formula_holds(start in 0i32..200, len in 1i32..300, step in 1i32..15) {
            let end = start + len;
            let days: Vec<Day> = (0..).map(|i| start + i * step).take_while(|d| *d <= end).collect();
            prop_assert_eq!(grid_len(start, end, step), days.len());
        }

        #[test]
        fn rvi_bounded(a in -40.0f64..10.0, b in -40.0f64..10.0) {
            let r = derive_rvi(&grid(Band::Vv, 0, 4, vec![a]), &grid(Band::Vh, 0, 4, vec![b])).unwrap();
            prop_assert!(r.values[0] > 0.0 && r.values[0] < 4.0);
        }
    }
}
