use std::collections::BTreeMap;

use super::Scene;
use crate::error::{Error, Result};
use crate::timeseries::Band;
use crate::zonal::{rasterize, Grid, GridStack};

/// Paint every plot's series into 10 m grids, one per band and acquisition.
/// Pixels outside all plots are no-data. Meant for small fixtures.
pub fn render_grids(scene: &Scene, pixel_size_m: f64) -> Result<GridStack> {
    let first = scene.plots.first().ok_or_else(|| Error::Input("empty scene".into()))?;
    let (mut xmin, mut ymin, mut xmax, mut ymax) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &scene.polygons {
        let b = p.bbox();
        (xmin, ymin, xmax, ymax) = (xmin.min(b.0), ymin.min(b.1), xmax.max(b.2), ymax.max(b.3));
    }
    let (x0, y0) = ((xmin / pixel_size_m).floor() * pixel_size_m, (ymax / pixel_size_m).ceil() * pixel_size_m);
    let width = ((xmax - x0) / pixel_size_m).ceil() as usize;
    let height = ((y0 - ymin) / pixel_size_m).ceil() as usize;
    let blank = Grid::filled(width, height, pixel_size_m, (x0, y0), f32::NAN)?;
    let masks = scene.polygons.iter().map(|p| rasterize(p, &blank)).collect::<Result<Vec<_>>>()?;

    let mut stack: GridStack = BTreeMap::new();
    for band in Band::INGESTED {
        let days: Vec<_> = first.band(band).map(|a| a.iter().map(|x| x.day).collect()).unwrap_or_default();
        let mut layers = Vec::with_capacity(days.len());
        for (k, day) in days.iter().enumerate() {
            let mut g = blank.clone();
            for (plot, mask) in scene.plots.iter().zip(&masks) {
                let acq = plot
                    .band(band)
                    .and_then(|a| a.get(k))
                    .filter(|a| a.day == *day)
                    .ok_or_else(|| Error::GridMismatch(format!("plot {} not on the shared schedule", plot.plot_id())))?;
                for (i, _) in mask.bits.iter().enumerate().filter(|(_, b)| **b) {
                    g.values[i] = acq.value_db as f32;
                }
            }
            layers.push((*day, g));
        }
        stack.insert(band, layers);
    }
    Ok(stack)
}
