//! Synthetic labelled scenes with known practice signatures.
//!
//! Each plot follows a latent water level `w(t)` in `[0, 1]` and a crop growth
//! fraction `g(t)`; backscatter is
//! `base + gain * g - drop * w * (1 - attenuation * g)` per band, sampled on a
//! revisit schedule with additive Gaussian speckle. Transplanted fields flood
//! from just before planting until drainage; AWD fields start wet-dry cycling
//! a month after transplanting; DSR fields show a short pre-sowing irrigation
//! and a dry spell before their first flood.

mod config;
mod render;

pub use config::{
    AwdModel, ClassCounts, ClassPlanting, DsrModel, PlantingModel, RevisitSchedule, SignalModel, SynthConfig, Waveform,
    DEFAULT_DISTRICTS,
};
pub use render::render_grids;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::Result;
use crate::rng::{derive_named, derive_seed, rng_from_seed};
use crate::timeseries::{write_labels_csv, write_series_csv, Acquisition, Band, Day, PlotSeries, PracticeLabel};
use crate::zonal::{write_polygons, PlotPolygon};

pub const MIN_PLOT_AREA_M2: f64 = 2000.0;
pub const MAX_PLOT_AREA_M2: f64 = 100_000.0;
/// Layout pitch; wider than the largest square plot.
const CELL_M: f64 = 340.0;

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd > 0.0 {
        Normal::new(0.0, sd).expect("finite sd").sample(rng)
    } else {
        0.0
    }
}

/// Practice-specific trajectory parameters realised for one plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PracticeTemplate {
    pub practice: PracticeLabel,
    pub base_vv_db: f64,
    pub base_vh_db: f64,
    pub flood_drop_db: f64,
    pub sowing_dip_duration_days: f64,
    pub awd_cycle_days: f64,
    pub awd_phase_days: f64,
    pub harvest_jitter_days: f64,
    pub signal: SignalModel,
    pub dsr: DsrModel,
    pub awd: AwdModel,
}

impl PracticeTemplate {
    /// Template with no per-plot randomness: nominal levels, zero phase and
    /// jitter, AWD cycle at the fixed value or the middle of its range.
    pub fn nominal(cfg: &SynthConfig, practice: PracticeLabel) -> Self {
        let cycle = cfg.awd.fixed_cycle_days.unwrap_or(0.5 * (cfg.awd.cycle_min_days + cfg.awd.cycle_max_days));
        Self {
            practice,
            base_vv_db: cfg.signal.vv_base_db,
            base_vh_db: cfg.signal.vh_base_db,
            flood_drop_db: cfg.signal.vv_flood_drop_db,
            sowing_dip_duration_days: cfg.dsr.sowing_dip_duration_days,
            awd_cycle_days: cycle,
            awd_phase_days: 0.0,
            harvest_jitter_days: 0.0,
            signal: cfg.signal.clone(),
            dsr: cfg.dsr.clone(),
            awd: cfg.awd.clone(),
        }
    }

    /// Draw the per-plot parameters.
    pub fn sample(cfg: &SynthConfig, practice: PracticeLabel, rng: &mut ChaCha8Rng) -> Self {
        let mut t = Self::nominal(cfg, practice);
        let offset = normal(rng, cfg.signal.base_sd_db);
        t.base_vv_db += offset;
        t.base_vh_db += offset;
        if cfg.awd.fixed_cycle_days.is_none() {
            t.awd_cycle_days = rng.random_range(cfg.awd.cycle_min_days..=cfg.awd.cycle_max_days);
        }
        t.awd_phase_days = rng.random_range(0.0..t.awd_cycle_days);
        t.harvest_jitter_days = normal(rng, cfg.signal.harvest_jitter_days);
        t
    }

    fn crop_start(&self, planting: f64) -> f64 {
        match self.practice {
            PracticeLabel::Dsr => planting + self.signal.nursery_days,
            _ => planting,
        }
    }

    fn harvest_day(&self, planting: f64) -> f64 {
        self.crop_start(planting) + self.signal.season_days + self.harvest_jitter_days
    }

    /// Crop growth fraction in `[0, 1]`.
    pub fn growth(&self, planting: f64, t: f64) -> f64 {
        let s = &self.signal;
        let rise = logistic((t - self.crop_start(planting) - s.growth_midpoint_days) / s.growth_scale_days);
        rise * (1.0 - logistic((t - self.harvest_day(planting)) / 4.0))
    }

    /// Field water level in `[0, 1]`.
    pub fn water(&self, planting: f64, t: f64) -> f64 {
        let flood_start = planting - self.signal.flood_lead_days;
        let drain = self.harvest_day(planting) - self.signal.drain_before_harvest_days;
        if t < flood_start || t >= drain {
            return 0.0;
        }
        match self.practice {
            PracticeLabel::Control => 1.0,
            PracticeLabel::Dsr => {
                if t < flood_start + self.sowing_dip_duration_days {
                    1.0
                } else if t < planting + self.dsr.dry_days_after_sowing {
                    0.0
                } else {
                    self.dsr.flood_level
                }
            }
            PracticeLabel::Awd => {
                let onset = planting + self.awd.onset_days + self.awd_phase_days;
                if t < onset {
                    return 1.0;
                }
                let u = ((t - onset) / self.awd_cycle_days).fract();
                let dry = self.awd.dry_level;
                match self.awd.waveform {
                    Waveform::Square => {
                        if u < 1.0 - self.awd.dry_fraction {
                            1.0
                        } else {
                            dry
                        }
                    }
                    Waveform::Sine => dry + (1.0 - dry) * 0.5 * (1.0 + (2.0 * std::f64::consts::PI * u).cos()),
                }
            }
        }
    }

    /// True while the field is meant to be continuously flooded after the
    /// crop is established.
    pub fn continuously_flooded(&self, planting: f64, t: f64) -> bool {
        let drain = self.harvest_day(planting) - self.signal.drain_before_harvest_days;
        let start = match self.practice {
            PracticeLabel::Control => planting + self.awd.onset_days,
            PracticeLabel::Dsr => planting + self.dsr.dry_days_after_sowing,
            PracticeLabel::Awd => return false,
        };
        t >= start && t < drain
    }

    /// Noise-free `(VV, VH)` in dB.
    pub fn latent(&self, planting: f64, t: f64) -> (f64, f64) {
        self.backscatter(planting, t, self.water(planting, t))
    }

    /// `(VV, VH)` in dB for an explicit water level.
    pub fn backscatter(&self, planting: f64, t: f64, water: f64) -> (f64, f64) {
        let s = &self.signal;
        let g = self.growth(planting, t);
        let w = water * (1.0 - s.canopy_attenuation * g);
        (
            self.base_vv_db + s.vv_growth_gain_db * g - self.flood_drop_db * w,
            self.base_vh_db + s.vh_growth_gain_db * g - s.vh_flood_drop_db * w,
        )
    }
}

fn draw_planting(model: &PlantingModel, practice: PracticeLabel, rng: &mut ChaCha8Rng) -> Day {
    let c = model.class(practice);
    let (lo, hi) = (model.span_start_day, model.span_start_day + model.span_days);
    let mut day = c.mean_day;
    for _ in 0..64 {
        let d = c.mean_day + normal(rng, c.sd_days);
        if (lo..=hi).contains(&d) {
            day = d;
            break;
        }
    }
    day.clamp(lo, hi).round() as Day
}

/// Truncated-normal planting day for one plot.
pub fn sample_planting(model: &PlantingModel, practice: PracticeLabel, rng_seed: u64) -> Day {
    draw_planting(model, practice, &mut rng_from_seed(rng_seed))
}

fn sample_bands(
    template: &PracticeTemplate,
    planting_day: Day,
    schedule: &RevisitSchedule,
    speckle_sigma_db: f64,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeMap<Band, Vec<Acquisition>>> {
    let (mut vv, mut vh) = (Vec::new(), Vec::new());
    let p = planting_day as f64;
    for day in schedule.days() {
        let t = day as f64;
        let mut water = template.water(p, t);
        // One draw per acquisition keeps the stream aligned across practices.
        let exposed = rng.random_bool(template.awd.cf_exposure_prob);
        if exposed && template.continuously_flooded(p, t) {
            water = water.min(template.awd.dry_level);
        }
        let (a, b) = template.backscatter(p, t, water);
        // Stored at raster precision so rendered grids reduce to the same values.
        let quantize = |v: f64| v as f32 as f64;
        vv.push(Acquisition::new(day, quantize(a + normal(rng, speckle_sigma_db)))?);
        vh.push(Acquisition::new(day, quantize(b + normal(rng, speckle_sigma_db)))?);
    }
    Ok(BTreeMap::from([(Band::Vv, vv), (Band::Vh, vh)]))
}

/// One labelled plot sampled on `schedule`.
pub fn generate_plot(
    template: &PracticeTemplate,
    planting_day: Day,
    schedule: &RevisitSchedule,
    speckle_sigma_db: f64,
    rng_seed: u64,
) -> Result<PlotSeries> {
    let bands = sample_bands(template, planting_day, schedule, speckle_sigma_db, &mut rng_from_seed(rng_seed))?;
    Ok(PlotSeries::new("synthetic", "synthetic", 10_000.0, bands)?.with_label(template.practice, Some(planting_day)))
}

/// Generated plots with their square boundaries, in plot-id order.
#[derive(Debug, Clone)]
pub struct Scene {
    pub plots: Vec<PlotSeries>,
    pub polygons: Vec<PlotPolygon>,
}

struct PlotSpec {
    label: PracticeLabel,
    district: String,
}

fn build_scene(specs: Vec<PlotSpec>, cfg: &SynthConfig, seed: u64) -> Result<Scene> {
    let ncols = (specs.len() as f64).sqrt().ceil().max(1.0) as usize;
    let out = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let area = (rng.random_range(MIN_PLOT_AREA_M2.ln()..=MAX_PLOT_AREA_M2.ln())).exp();
            let planting = if cfg.align_planting_dates {
                cfg.aligned_day
            } else {
                draw_planting(&cfg.planting, spec.label, &mut rng)
            };
            let template = PracticeTemplate::sample(cfg, spec.label, &mut rng);
            let bands = sample_bands(&template, planting, &cfg.schedule, cfg.speckle_sigma_db, &mut rng)?;
            let id = format!("P{:05}", i + 1);
            let (x, y) = ((i % ncols) as f64 * CELL_M, (i / ncols) as f64 * CELL_M);
            let poly = PlotPolygon::square(id.clone(), spec.district.clone(), x, y, area.sqrt())?;
            let plot = PlotSeries::new(id, spec.district.clone(), poly.area(), bands)?.with_label(spec.label, Some(planting));
            Ok((plot, poly))
        })
        .collect::<Result<Vec<_>>>()?;
    let (plots, polygons) = out.into_iter().unzip();
    Ok(Scene { plots, polygons })
}

/// Scene with exact per-class counts in shuffled order and round-robin districts.
pub fn generate_scene(counts: &ClassCounts, cfg: &SynthConfig, seed: u64) -> Result<Scene> {
    cfg.validate()?;
    let mut labels: Vec<PracticeLabel> =
        PracticeLabel::ALL.iter().flat_map(|&l| std::iter::repeat_n(l, counts.get(l))).collect();
    labels.shuffle(&mut rng_from_seed(derive_named(seed, "scene-order")));
    let specs = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| PlotSpec { label, district: cfg.districts[i % cfg.districts.len()].clone() })
        .collect();
    build_scene(specs, cfg, seed)
}

/// Per-district plot count and DSR rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DistrictRate {
    pub district: String,
    pub n_plots: usize,
    pub dsr_rate: f64,
}

/// Scene whose DSR share per district follows `rates`; non-DSR plots split
/// evenly between continuous flooding and AWD.
pub fn generate_district_scene(rates: &[DistrictRate], cfg: &SynthConfig, seed: u64) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = rng_from_seed(derive_named(seed, "district-labels"));
    let mut specs = Vec::new();
    for r in rates {
        for _ in 0..r.n_plots {
            let label = if rng.random_bool(r.dsr_rate.clamp(0.0, 1.0)) {
                PracticeLabel::Dsr
            } else if rng.random_bool(0.5) {
                PracticeLabel::Control
            } else {
                PracticeLabel::Awd
            };
            specs.push(PlotSpec { label, district: r.district.clone() });
        }
    }
    build_scene(specs, cfg, seed)
}

pub const SERIES_FILE: &str = "series.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const POLYGONS_FILE: &str = "plots.geojson";

/// Write `series.csv`, `labels.csv` and `plots.geojson` into `dir`.
pub fn write_scene(dir: &Path, scene: &Scene) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_series_csv(BufWriter::new(File::create(dir.join(SERIES_FILE))?), &scene.plots)?;
    write_labels_csv(BufWriter::new(File::create(dir.join(LABELS_FILE))?), &scene.plots)?;
    write_polygons(BufWriter::new(File::create(dir.join(POLYGONS_FILE))?), &scene.polygons)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_cfg() -> SynthConfig {
        SynthConfig { speckle_sigma_db: 0.0, ..SynthConfig::default() }
    }

    fn vv_series(p: &PlotSeries) -> Vec<(Day, f64)> {
        p.band(Band::Vv).unwrap().iter().map(|a| (a.day, a.value_db)).collect()
    }

    #[test]
    fn planting_ordering_and_span() {
        let model = PlantingModel::default();
        let mut all = Vec::new();
        let mut means = Vec::new();
        for (k, label) in [PracticeLabel::Dsr, PracticeLabel::Control, PracticeLabel::Awd].into_iter().enumerate() {
            let draws: Vec<Day> = (0..10_000u64).map(|i| sample_planting(&model, label, derive_seed(k as u64, i))).collect();
            means.push(draws.iter().map(|&d| d as f64).sum::<f64>() / draws.len() as f64);
            all.extend(draws);
        }
        assert!(means[0] < means[1] && means[1] < means[2], "{means:?}");
        assert!(all.iter().max().unwrap() - all.iter().min().unwrap() <= 110);
    }

    #[test]
    fn zero_sd_returns_mean() {
        let mut model = PlantingModel::default();
        model.control.sd_days = 0.0;
        for s in 0..20 {
            assert_eq!(sample_planting(&model, PracticeLabel::Control, s), 50);
        }
    }

    #[test]
    fn dsr_global_vv_minimum_near_sowing() {
        let cfg = quiet_cfg();
        let t = PracticeTemplate::nominal(&cfg, PracticeLabel::Dsr);
        for planting in [20, 33, 47] {
            let p = generate_plot(&t, planting, &RevisitSchedule::every(1), 0.0, 1).unwrap();
            let (day, _) = vv_series(&p).into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            let lo = planting - 7;
            let hi = planting + t.sowing_dip_duration_days as Day;
            assert!((lo..=hi).contains(&day), "planting {planting}: minimum at {day}");
        }
    }

    #[test]
    fn flooding_lowers_early_vv() {
        let cfg = quiet_cfg();
        let window_mean = |label| {
            let t = PracticeTemplate::nominal(&cfg, label);
            (55..=75).map(|d| t.latent(50.0, d as f64).0).sum::<f64>() / 21.0
        };
        let dsr = window_mean(PracticeLabel::Dsr);
        assert!(window_mean(PracticeLabel::Control) < dsr);
        assert!(window_mean(PracticeLabel::Awd) < dsr);
    }

    #[test]
    fn transplant_flood_lasts_twenty_days() {
        let cfg = quiet_cfg();
        for label in [PracticeLabel::Control, PracticeLabel::Awd] {
            let t = PracticeTemplate::nominal(&cfg, label);
            assert!((47..=70).all(|d| t.water(50.0, d as f64) == 1.0), "{label}");
        }
    }

    fn autocorr(x: &[f64], lag: usize) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let var: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
        (0..x.len() - lag).map(|i| (x[i] - m) * (x[i + lag] - m)).sum::<f64>() / var
    }

    /// Lag (in samples) of the first local maximum of the autocorrelation.
    fn first_peak(x: &[f64]) -> Option<usize> {
        let ac: Vec<f64> = (0..x.len() / 2).map(|l| autocorr(x, l)).collect();
        (1..ac.len() - 1).find(|&l| ac[l] > ac[l - 1] && ac[l] >= ac[l + 1] && ac[l] > 0.2)
    }

    fn awd_cycling_vv(cycle: f64, period: Day) -> Vec<f64> {
        let mut cfg = quiet_cfg();
        cfg.awd.fixed_cycle_days = Some(cycle);
        let mut t = PracticeTemplate::nominal(&cfg, PracticeLabel::Awd);
        t.awd_phase_days = 1.0;
        // Flat canopy removes the growth trend; only the water signal remains.
        t.signal.canopy_attenuation = 0.0;
        t.signal.vv_growth_gain_db = 0.0;
        let p = generate_plot(&t, 20, &RevisitSchedule::every(period), 0.0, 3).unwrap();
        vv_series(&p).into_iter().filter(|(d, _)| (60..=130).contains(d)).map(|(_, v)| v).collect()
    }

    #[test]
    fn awd_period_visible_at_four_days_only() {
        for cycle in [8.0, 10.0] {
            let lag = first_peak(&awd_cycling_vv(cycle, 4)).expect("periodic at 4-day revisit");
            assert!(((lag * 4) as f64 - cycle).abs() <= 4.0, "cycle {cycle}: lag {lag}");
        }
        for cycle in [6.0, 8.0, 10.0] {
            if let Some(lag) = first_peak(&awd_cycling_vv(cycle, 12)) {
                assert!(((lag * 12) as f64 - cycle).abs() > 2.0, "cycle {cycle}: lag {lag}");
            }
        }
    }

    #[test]
    fn same_seed_same_plot() {
        let cfg = SynthConfig::default();
        let t = PracticeTemplate::nominal(&cfg, PracticeLabel::Awd);
        let a = generate_plot(&t, 60, &cfg.schedule, 0.7, 9).unwrap();
        let b = generate_plot(&t, 60, &cfg.schedule, 0.7, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scene_counts_and_layout() {
        let cfg = SynthConfig::default();
        let scene = generate_scene(&ClassCounts::uniform(1), &cfg, 1).unwrap();
        assert_eq!(scene.plots.len(), 3);
        let mut labels: Vec<_> = scene.plots.iter().map(|p| p.label.unwrap()).collect();
        labels.sort();
        assert_eq!(labels, PracticeLabel::ALL.to_vec());
        let counts = ClassCounts { control: 41, dsr: 42, awd: 45 };
        let scene = generate_scene(&counts, &cfg, 5).unwrap();
        for l in PracticeLabel::ALL {
            assert_eq!(scene.plots.iter().filter(|p| p.label == Some(l)).count(), counts.get(l));
        }
        for (i, (p, poly)) in scene.plots.iter().zip(&scene.polygons).enumerate() {
            assert_eq!(p.plot_id(), format!("P{:05}", i + 1));
            assert_eq!(p.district(), cfg.districts[i % cfg.districts.len()]);
            assert!((MIN_PLOT_AREA_M2..=MAX_PLOT_AREA_M2 + 1e-6).contains(&poly.area()));
        }
    }

    #[test]
    fn scene_files_are_deterministic() {
        let cfg = SynthConfig::default();
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            write_scene(d.path(), &generate_scene(&ClassCounts::uniform(5), &cfg, 77).unwrap()).unwrap();
        }
        for f in [SERIES_FILE, LABELS_FILE, POLYGONS_FILE] {
            assert_eq!(std::fs::read(dirs[0].path().join(f)).unwrap(), std::fs::read(dirs[1].path().join(f)).unwrap());
        }
    }

    #[test]
    fn aligned_planting_is_uniform() {
        let cfg = SynthConfig { align_planting_dates: true, ..SynthConfig::default() };
        let scene = generate_scene(&ClassCounts::uniform(10), &cfg, 3).unwrap();
        assert!(scene.plots.iter().all(|p| p.planting_day == Some(cfg.aligned_day)));
    }
}
