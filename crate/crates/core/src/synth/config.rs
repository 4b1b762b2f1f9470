//! Generator configuration. Numeric defaults are calibration constants for a
//! stylised backscatter model, not measured magnitudes.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{Day, PracticeLabel, SEASON_END_DAY};

pub const DEFAULT_DISTRICTS: [&str; 18] = [
    "Amritsar", "Barnala", "Bathinda", "Faridkot", "Fatehgarh Sahib", "Fazilka", "Ferozepur", "Gurdaspur",
    "Hoshiarpur", "Jalandhar", "Kapurthala", "Ludhiana", "Mansa", "Moga", "Muktsar", "Patiala", "Sangrur",
    "Tarn Taran",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassCounts {
    pub control: usize,
    pub dsr: usize,
    pub awd: usize,
}

impl Default for ClassCounts {
    fn default() -> Self {
        Self { control: 411, dsr: 420, awd: 452 }
    }
}

impl ClassCounts {
    pub fn uniform(n: usize) -> Self {
        Self { control: n, dsr: n, awd: n }
    }

    pub fn get(&self, label: PracticeLabel) -> usize {
        match label {
            PracticeLabel::Control => self.control,
            PracticeLabel::Dsr => self.dsr,
            PracticeLabel::Awd => self.awd,
        }
    }

    pub fn total(&self) -> usize {
        self.control + self.dsr + self.awd
    }
}

/// Satellite acquisition calendar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RevisitSchedule {
    pub start_day: Day,
    pub end_day: Day,
    pub period_days: Day,
    /// Indices into the regular calendar that are lost.
    pub dropped: BTreeSet<usize>,
}

impl Default for RevisitSchedule {
    fn default() -> Self {
        Self { start_day: 0, end_day: SEASON_END_DAY, period_days: 12, dropped: BTreeSet::from([5]) }
    }
}

impl RevisitSchedule {
    pub fn every(period_days: Day) -> Self {
        Self { period_days, dropped: BTreeSet::new(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.period_days < 1 {
            return Err(Error::Config(format!("schedule period must be >= 1, got {}", self.period_days)));
        }
        if self.start_day < 0 || self.end_day <= self.start_day {
            return Err(Error::Config(format!("schedule [{}, {}] is empty", self.start_day, self.end_day)));
        }
        Ok(())
    }

    pub fn days(&self) -> Vec<Day> {
        (self.start_day..=self.end_day)
            .step_by(self.period_days.max(1) as usize)
            .enumerate()
            .filter(|(i, _)| !self.dropped.contains(i))
            .map(|(_, d)| d)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassPlanting {
    pub mean_day: f64,
    pub sd_days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantingModel {
    pub control: ClassPlanting,
    pub dsr: ClassPlanting,
    pub awd: ClassPlanting,
    /// First admissible planting day.
    pub span_start_day: f64,
    /// Width of the admissible planting window.
    pub span_days: f64,
}

impl Default for PlantingModel {
    fn default() -> Self {
        Self {
            dsr: ClassPlanting { mean_day: 42.0, sd_days: 10.0 },
            control: ClassPlanting { mean_day: 50.0, sd_days: 13.0 },
            awd: ClassPlanting { mean_day: 78.0, sd_days: 13.0 },
            span_start_day: 5.0,
            span_days: 110.0,
        }
    }
}

impl PlantingModel {
    pub fn class(&self, label: PracticeLabel) -> ClassPlanting {
        match label {
            PracticeLabel::Control => self.control,
            PracticeLabel::Dsr => self.dsr,
            PracticeLabel::Awd => self.awd,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dsr.mean_day < self.control.mean_day && self.control.mean_day < self.awd.mean_day) {
            return Err(Error::Config("planting means must satisfy dsr < control < awd".into()));
        }
        if !(0.0..=110.0).contains(&self.span_days) {
            return Err(Error::Config(format!("planting span must lie in [0, 110] days, got {}", self.span_days)));
        }
        for c in [self.control, self.dsr, self.awd] {
            if !(c.sd_days >= 0.0) {
                return Err(Error::Config("planting sd must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// Backscatter response shared by all practices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalModel {
    pub vv_base_db: f64,
    pub vh_base_db: f64,
    /// Between-plot spread of the base levels.
    pub base_sd_db: f64,
    pub vv_growth_gain_db: f64,
    pub vh_growth_gain_db: f64,
    pub vv_flood_drop_db: f64,
    pub vh_flood_drop_db: f64,
    /// Fraction of the flood drop masked by a full canopy.
    pub canopy_attenuation: f64,
    /// Growth-curve midpoint after transplanting.
    pub growth_midpoint_days: f64,
    pub growth_scale_days: f64,
    /// Seedling age at transplanting; direct-seeded crops lag by this much.
    pub nursery_days: f64,
    /// Transplant-to-harvest duration.
    pub season_days: f64,
    pub harvest_jitter_days: f64,
    pub drain_before_harvest_days: f64,
    /// Fields are flooded this many days before planting.
    pub flood_lead_days: f64,
}

impl Default for SignalModel {
    fn default() -> Self {
        Self {
            vv_base_db: -11.0,
            vh_base_db: -19.0,
            base_sd_db: 0.8,
            vv_growth_gain_db: 2.5,
            vh_growth_gain_db: 6.0,
            vv_flood_drop_db: 6.0,
            vh_flood_drop_db: 3.0,
            canopy_attenuation: 0.6,
            growth_midpoint_days: 35.0,
            growth_scale_days: 8.0,
            nursery_days: 0.0,
            season_days: 110.0,
            harvest_jitter_days: 5.0,
            drain_before_harvest_days: 14.0,
            flood_lead_days: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DsrModel {
    pub sowing_dip_duration_days: f64,
    /// Dry spell between sowing and the first irrigation.
    pub dry_days_after_sowing: f64,
    pub flood_level: f64,
}

impl Default for DsrModel {
    fn default() -> Self {
        Self { sowing_dip_duration_days: 6.0, dry_days_after_sowing: 21.0, flood_level: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Square,
    Sine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AwdModel {
    pub cycle_min_days: f64,
    pub cycle_max_days: f64,
    /// Overrides the per-plot random cycle when set.
    pub fixed_cycle_days: Option<f64>,
    /// Cycling starts this many days after transplanting.
    pub onset_days: f64,
    pub dry_fraction: f64,
    /// Water level during the dry phase, 0 = fully drained.
    pub dry_level: f64,
    pub waveform: Waveform,
    /// Chance that a continuously flooded field is caught between
    /// irrigations, showing the AWD dry level, at any one acquisition.
    pub cf_exposure_prob: f64,
}

impl Default for AwdModel {
    fn default() -> Self {
        Self {
            cycle_min_days: 4.0,
            cycle_max_days: 10.0,
            fixed_cycle_days: None,
            onset_days: 30.0,
            dry_fraction: 0.5,
            dry_level: 0.0,
            waveform: Waveform::Square,
            cf_exposure_prob: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub speckle_sigma_db: f64,
    /// Plant every plot on `aligned_day`, removing planting-lag cues.
    pub align_planting_dates: bool,
    pub aligned_day: Day,
    pub districts: Vec<String>,
    pub counts: ClassCounts,
    pub schedule: RevisitSchedule,
    pub planting: PlantingModel,
    pub signal: SignalModel,
    pub dsr: DsrModel,
    pub awd: AwdModel,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            speckle_sigma_db: 1.0,
            align_planting_dates: false,
            aligned_day: 50,
            districts: DEFAULT_DISTRICTS.iter().map(|s| s.to_string()).collect(),
            counts: ClassCounts::default(),
            schedule: RevisitSchedule::default(),
            planting: PlantingModel::default(),
            signal: SignalModel::default(),
            dsr: DsrModel::default(),
            awd: AwdModel::default(),
        }
    }
}

impl SynthConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.planting.validate()?;
        if self.districts.is_empty() {
            return Err(Error::Config("district list is empty".into()));
        }
        if !(self.speckle_sigma_db >= 0.0) {
            return Err(Error::Config("speckle sigma must be non-negative".into()));
        }
        let a = &self.awd;
        let cycle_ok = |c: f64| (4.0..=10.0).contains(&c);
        if !(cycle_ok(a.cycle_min_days) && cycle_ok(a.cycle_max_days) && a.cycle_min_days <= a.cycle_max_days) {
            return Err(Error::Config("AWD cycle bounds must satisfy 4 <= min <= max <= 10".into()));
        }
        if let Some(c) = a.fixed_cycle_days {
            if !cycle_ok(c) {
                return Err(Error::Config(format!("fixed AWD cycle {c} outside [4, 10]")));
            }
        }
        if !(0.0..=1.0).contains(&a.cf_exposure_prob) {
            return Err(Error::Config("CF exposure probability must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&a.dry_fraction) {
            return Err(Error::Config("AWD dry fraction must lie in [0, 1)".into()));
        }
        if !(0..=SEASON_END_DAY).contains(&self.aligned_day) {
            return Err(Error::Config("aligned planting day outside the season".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_drops_one_acquisition() {
        let days = RevisitSchedule::default().days();
        assert_eq!(days.len(), 19);
        assert_eq!(&days[..6], &[0, 12, 24, 36, 48, 72]);
        assert_eq!(*days.last().unwrap(), 228);
    }

    #[test]
    fn toml_roundtrip_and_partial_override() {
        let cfg = SynthConfig::default();
        assert_eq!(SynthConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
        let partial = SynthConfig::from_toml_str("seed = 7\n[awd]\nfixed_cycle_days = 8.0\n").unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.awd.fixed_cycle_days, Some(8.0));
        assert_eq!(partial.counts, ClassCounts::default());
    }

    #[test]
    fn bad_config_rejected() {
        assert!(SynthConfig::from_toml_str("bogus = 1").is_err());
        assert!(SynthConfig::from_toml_str("[awd]\ncycle_max_days = 12.0").is_err());
        assert!(SynthConfig::from_toml_str("[schedule]\nperiod_days = 0").is_err());
    }
}
