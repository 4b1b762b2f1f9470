//! Shared loading helpers for the subcommands.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{Context, Result};
use paddy_core::features::{TemporalWindow, DEFAULT_STEP};
use paddy_core::timeseries::{read_labels_csv, PlotSeries, SeriesCsvReader, SEASON_END_DAY};

use crate::dates::parse_day;
use crate::{UsageError, WindowArgs};

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// Window from flags, falling back to `default` field by field.
pub fn window(args: &WindowArgs, default: Option<TemporalWindow>) -> Result<TemporalWindow> {
    let start = match &args.start {
        Some(s) => parse_day(s)?,
        None => default.map_or(0, |w| w.start_day),
    };
    let end = match &args.end {
        Some(s) => parse_day(s)?,
        None => default.map_or(SEASON_END_DAY, |w| w.end_day),
    };
    let step = args.step.unwrap_or(default.map_or(DEFAULT_STEP, |w| w.step_days));
    Ok(TemporalWindow::new(start, end, step)?)
}

/// Every plot of a series CSV, with labels joined from `labels` when given.
pub fn load_plots(series: &Path, labels: Option<&Path>) -> Result<Vec<PlotSeries>> {
    let reader = SeriesCsvReader::new(open(series)?).with_context(|| format!("reading {}", series.display()))?;
    let mut plots = reader.collect::<paddy_core::Result<Vec<_>>>().with_context(|| format!("reading {}", series.display()))?;
    if plots.is_empty() {
        return Err(UsageError(format!("{} contains no plots", series.display())).into());
    }
    if let Some(path) = labels {
        let table = read_labels_csv(open(path)?).with_context(|| format!("reading {}", path.display()))?;
        let mut missing = 0;
        plots = plots
            .into_iter()
            .map(|p| match table.get(p.plot_id()) {
                Some(rec) => p.with_label(rec.label, rec.planting_day),
                None => {
                    missing += 1;
                    p
                }
            })
            .collect();
        if missing > 0 {
            log::warn!("{missing} plots have no label in {}", path.display());
        }
    }
    Ok(plots)
}
