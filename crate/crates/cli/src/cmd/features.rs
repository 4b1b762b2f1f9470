use anyhow::{Context, Result};
use paddy_core::features::{extract_features, write_features_csv, FeatureRow};
use paddy_core::timeseries::PlotSeries;
use paddy_core::zonal::{load_grid_stack, read_polygons, reduce_polygon, size_filter, DEFAULT_MAX_AREA_M2, DEFAULT_MIN_AREA_M2};
use rayon::prelude::*;

use crate::inputs::{create, load_plots, open, window};
use crate::manifest::{beside, RunManifest};
use crate::{FeaturesArgs, UsageError};

fn plots_from_grids(a: &FeaturesArgs, manifest: &mut RunManifest) -> Result<Vec<PlotSeries>> {
    let (dir, poly_path) = (a.grids.as_ref().expect("clap"), a.polygons.as_ref().expect("clap"));
    let stack = load_grid_stack(dir).with_context(|| format!("loading grids from {}", dir.display()))?;
    let mut polys = read_polygons(open(poly_path)?).with_context(|| format!("reading {}", poly_path.display()))?;
    manifest.input(poly_path)?;
    let n_read = polys.len();
    if !a.no_size_filter {
        polys = size_filter(polys, DEFAULT_MIN_AREA_M2, DEFAULT_MAX_AREA_M2);
    }
    let results: Vec<_> = polys.par_iter().map(|p| (p.plot_id.clone(), reduce_polygon(p, &stack, a.buffer_px))).collect();
    let mut plots = Vec::with_capacity(results.len());
    for (id, r) in results {
        match r {
            Ok(p) => plots.push(p),
            Err(e) => log::warn!("plot {id}: {e}"),
        }
    }
    manifest.stage("zonal", format!("{n_read} polygons, {} kept by size, {} reduced", polys.len(), plots.len()));
    Ok(plots)
}

pub fn run(a: FeaturesArgs) -> Result<()> {
    let w = window(&a.window, None)?;
    let mut manifest = RunManifest::start("features", &w.to_string(), None);
    let mut plots = match &a.series {
        Some(series) => {
            manifest.input(series)?;
            load_plots(series, None)?
        }
        None => plots_from_grids(&a, &mut manifest)?,
    };
    if let Some(labels) = &a.labels {
        manifest.input(labels)?;
        let table = paddy_core::timeseries::read_labels_csv(open(labels)?)?;
        plots = plots
            .into_iter()
            .map(|p| match table.get(p.plot_id()).cloned() {
                Some(rec) => p.with_label(rec.label, rec.planting_day),
                None => p,
            })
            .collect();
    }
    if plots.is_empty() {
        return Err(UsageError("no plots to extract features from".into()).into());
    }
    let results: Vec<_> = plots.par_iter().map(|p| extract_features(p, &w).map(|v| FeatureRow { vector: v, label: p.label })).collect();
    let mut rows = Vec::with_capacity(results.len());
    for (p, r) in plots.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => log::warn!("plot {}: {e}", p.plot_id()),
        }
    }
    manifest.stage("extract", format!("{} of {} plots", rows.len(), plots.len()));
    if rows.is_empty() {
        anyhow::bail!("feature extraction failed for every plot");
    }
    let mut out = create(&a.out)?;
    write_features_csv(&mut out, &[format!("window={w}")], &rows)?;
    std::io::Write::flush(&mut out)?;
    manifest.output(&a.out)?;
    manifest.finish(&beside(&a.out))?;
    println!("wrote {} feature rows ({w}) to {}", rows.len(), a.out.display());
    Ok(())
}
