//! Binary grid files and GeoJSON plot boundaries.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde_json::{json, Value};

use super::{Grid, PlotPolygon, Ring};
use crate::error::{Error, Result};
use crate::timeseries::{Band, Day};

pub const GRID_MAGIC: &[u8; 4] = b"ZGRD";
pub const GRID_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 4 + 8 + 8;

/// Per-band stack of `(day, grid)` layers, days ascending.
pub type GridStack = BTreeMap<Band, Vec<(Day, Grid)>>;

pub fn write_grid<W: Write>(mut w: W, grid: &Grid) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * grid.values.len());
    buf.extend_from_slice(GRID_MAGIC);
    buf.extend_from_slice(&GRID_VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.width as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.height as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.pixel_size_m as f32).to_le_bytes());
    buf.extend_from_slice(&grid.origin.0.to_le_bytes());
    buf.extend_from_slice(&grid.origin.1.to_le_bytes());
    for v in &grid.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_grid<R: Read>(mut r: R) -> Result<Grid> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN || &bytes[0..4] != GRID_MAGIC {
        return Err(Error::Input("not a grid file".into()));
    }
    let u16_at = |o: usize| u16::from_le_bytes(bytes[o..o + 2].try_into().unwrap());
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u16_at(4);
    if version != GRID_VERSION {
        return Err(Error::Input(format!("unsupported grid version {version}")));
    }
    let (width, height) = (u32_at(6) as usize, u32_at(10) as usize);
    let pixel = f64::from(f32_at(14));
    let origin = (f64_at(18), f64_at(26));
    let body = &bytes[HEADER_LEN..];
    if body.len() != 4 * width * height {
        return Err(Error::Input(format!("grid body has {} bytes, expected {}", body.len(), 4 * width * height)));
    }
    let values = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Grid::new(width, height, pixel, origin, values)
}

/// Load `{BAND}_{day}.zgrd` files from a directory.
pub fn load_grid_stack(dir: &Path) -> Result<GridStack> {
    let mut stack = GridStack::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("zgrd") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let (band, day) = stem
            .split_once('_')
            .ok_or_else(|| Error::Input(format!("grid file name {stem} is not BAND_day")))?;
        let band: Band = band.parse()?;
        if band.is_derived() {
            return Err(Error::Input(format!("derived band {band} cannot be ingested")));
        }
        let day: Day = day.parse().map_err(|_| Error::Input(format!("bad day in grid file name {stem}")))?;
        let grid = read_grid(fs::File::open(&path)?)?;
        stack.entry(band).or_default().push((day, grid));
    }
    for layers in stack.values_mut() {
        layers.sort_by_key(|(d, _)| *d);
    }
    Ok(stack)
}

fn ring_json(ring: &Ring) -> Value {
    Value::Array(ring.iter().map(|(x, y)| json!([x, y])).collect())
}

fn parse_ring(v: &Value) -> Result<Ring> {
    v.as_array()
        .ok_or_else(|| Error::Geometry("ring is not an array".into()))?
        .iter()
        .map(|p| match p.as_array().map(|a| (a.first().and_then(Value::as_f64), a.get(1).and_then(Value::as_f64))) {
            Some((Some(x), Some(y))) => Ok((x, y)),
            _ => Err(Error::Geometry("bad coordinate".into())),
        })
        .collect()
}

pub fn write_polygons<W: Write>(w: W, polys: &[PlotPolygon]) -> Result<()> {
    let features: Vec<Value> = polys
        .iter()
        .map(|p| {
            let rings: Vec<Value> = std::iter::once(&p.exterior).chain(&p.holes).map(ring_json).collect();
            json!({
                "type": "Feature",
                "properties": {"plot_id": p.plot_id, "district": p.district},
                "geometry": {"type": "Polygon", "coordinates": rings},
            })
        })
        .collect();
    serde_json::to_writer(w, &json!({"type": "FeatureCollection", "features": features}))?;
    Ok(())
}

pub fn read_polygons<R: Read>(r: R) -> Result<Vec<PlotPolygon>> {
    let doc: Value = serde_json::from_reader(r)?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Input("GeoJSON has no features array".into()))?;
    features
        .iter()
        .map(|f| {
            let prop = |k: &str| {
                f.pointer(&format!("/properties/{k}"))
                    .and_then(Value::as_str)
                    .map(str::to_owned)
                    .ok_or_else(|| Error::Input(format!("feature missing property {k}")))
            };
            let (plot_id, district) = (prop("plot_id")?, prop("district")?);
            if f.pointer("/geometry/type").and_then(Value::as_str) != Some("Polygon") {
                return Err(Error::Geometry(format!("{plot_id}: only Polygon geometries are supported")));
            }
            let rings = f
                .pointer("/geometry/coordinates")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Geometry(format!("{plot_id}: missing coordinates")))?
                .iter()
                .map(parse_ring)
                .collect::<Result<Vec<_>>>()?;
            let mut it = rings.into_iter();
            let exterior = it.next().ok_or_else(|| Error::Geometry(format!("{plot_id}: no rings")))?;
            PlotPolygon::new(plot_id, district, exterior, it.collect())
        })
        .collect()
}
