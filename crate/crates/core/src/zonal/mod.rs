//! Reduction of gridded backscatter to per-plot mean series.
//!
//! A pixel belongs to a plot when its center lies inside the polygon (even-odd
//! rule over all rings). The negative buffer is a raster erosion with a square
//! structuring element, one pixel (10 m) by default. Coordinates are planar
//! and assumed to be projected already.

mod io;

pub use io::{load_grid_stack, read_grid, read_polygons, write_grid, write_polygons, GridStack, GRID_MAGIC, GRID_VERSION};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::timeseries::{Acquisition, Band, Day, PlotSeries};

pub const DEFAULT_MIN_AREA_M2: f64 = 2000.0;
pub const DEFAULT_MAX_AREA_M2: f64 = 100_000.0;
pub const DEFAULT_BUFFER_PX: usize = 1;

/// Raster of backscatter values. `origin` is the top-left corner, rows run
/// southwards (north-up). NaN marks no-data.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub pixel_size_m: f64,
    pub origin: (f64, f64),
    pub values: Vec<f32>,
}

impl Grid {
    pub fn new(width: usize, height: usize, pixel_size_m: f64, origin: (f64, f64), values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Input("grid dimensions must be positive".into()));
        }
        if width * height != values.len() {
            return Err(Error::Input(format!("grid {width}x{height} needs {} values, got {}", width * height, values.len())));
        }
        if !(pixel_size_m > 0.0) {
            return Err(Error::Input("pixel size must be positive".into()));
        }
        Ok(Self { width, height, pixel_size_m, origin, values })
    }

    pub fn filled(width: usize, height: usize, pixel_size_m: f64, origin: (f64, f64), fill: f32) -> Result<Self> {
        Self::new(width, height, pixel_size_m, origin, vec![fill; width * height])
    }

    pub fn pixel_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.origin.0 + (col as f64 + 0.5) * self.pixel_size_m,
            self.origin.1 - (row as f64 + 0.5) * self.pixel_size_m,
        )
    }

    pub fn get(&self, col: usize, row: usize) -> f32 {
        self.values[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, v: f32) {
        self.values[row * self.width + col] = v;
    }

    pub fn congruent(&self, other: &Grid) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.pixel_size_m == other.pixel_size_m
            && self.origin == other.origin
    }
}

/// Boolean pixel mask over a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }
}

pub type Ring = Vec<(f64, f64)>;

/// A field boundary: exterior ring plus optional holes, rings closed.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPolygon {
    pub plot_id: String,
    pub district: String,
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

fn ring_signed_area(ring: &[(f64, f64)]) -> f64 {
    ring.windows(2).map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1).sum::<f64>() / 2.0
}

fn segments_cross(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let orient = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn validate_ring(ring: &[(f64, f64)], what: &str) -> Result<()> {
    if ring.len() < 4 {
        return Err(Error::Geometry(format!("{what} ring needs at least 4 vertices, got {}", ring.len())));
    }
    if ring.first() != ring.last() {
        return Err(Error::Geometry(format!("{what} ring is not closed")));
    }
    let segs: Vec<_> = ring.windows(2).map(|w| (w[0], w[1])).collect();
    let n = segs.len();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                return Err(Error::Geometry(format!("{what} ring self-intersects")));
            }
        }
    }
    Ok(())
}

impl PlotPolygon {
    pub fn new(plot_id: impl Into<String>, district: impl Into<String>, exterior: Ring, holes: Vec<Ring>) -> Result<Self> {
        validate_ring(&exterior, "exterior")?;
        for h in &holes {
            validate_ring(h, "hole")?;
        }
        let poly = Self { plot_id: plot_id.into(), district: district.into(), exterior, holes };
        if !(poly.area() > 0.0) {
            return Err(Error::Geometry(format!("polygon {} has no area", poly.plot_id)));
        }
        Ok(poly)
    }

    /// Axis-aligned square with lower-left corner `(x, y)`.
    pub fn square(plot_id: impl Into<String>, district: impl Into<String>, x: f64, y: f64, side: f64) -> Result<Self> {
        let ring = vec![(x, y), (x + side, y), (x + side, y + side), (x, y + side), (x, y)];
        Self::new(plot_id, district, ring, Vec::new())
    }

    /// Shoelace area of the exterior minus the holes.
    pub fn area(&self) -> f64 {
        ring_signed_area(&self.exterior).abs() - self.holes.iter().map(|h| ring_signed_area(h).abs()).sum::<f64>()
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &self.exterior {
            b = (b.0.min(x), b.1.min(y), b.2.max(x), b.3.max(y));
        }
        b
    }

    /// Even-odd containment over every ring.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for ring in std::iter::once(&self.exterior).chain(&self.holes) {
            for w in ring.windows(2) {
                let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                if (y0 > y) != (y1 > y) {
                    let xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0);
                    if x < xc {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }
}

/// Pixels whose centers fall inside `poly`.
pub fn rasterize(poly: &PlotPolygon, grid: &Grid) -> Result<Mask> {
    let mut mask = Mask::empty(grid.width, grid.height);
    let (xmin, ymin, xmax, ymax) = poly.bbox();
    let ps = grid.pixel_size_m;
    let col_lo = ((xmin - grid.origin.0) / ps - 0.5).floor().max(0.0) as usize;
    let col_hi = (((xmax - grid.origin.0) / ps + 0.5).ceil().max(0.0) as usize).min(grid.width);
    let row_lo = ((grid.origin.1 - ymax) / ps - 0.5).floor().max(0.0) as usize;
    let row_hi = (((grid.origin.1 - ymin) / ps + 0.5).ceil().max(0.0) as usize).min(grid.height);
    let mut any = false;
    for row in row_lo..row_hi {
        for col in col_lo..col_hi {
            let (x, y) = grid.pixel_center(col, row);
            if poly.contains(x, y) {
                mask.bits[row * grid.width + col] = true;
                any = true;
            }
        }
    }
    if !any {
        return Err(Error::EmptyMask);
    }
    Ok(mask)
}

/// Morphological erosion with a square element of half-width `radius_px`.
/// Pixels beyond the grid edge count as unset.
pub fn erode(mask: &Mask, radius_px: usize) -> Mask {
    if radius_px == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width, mask.height);
    let r = radius_px as isize;
    // The square element is separable: erode rows, then columns.
    let pass = |src: &[bool], horizontal: bool| -> Vec<bool> {
        let mut out = vec![false; w * h];
        for row in 0..h {
            for col in 0..w {
                let mut keep = true;
                for k in -r..=r {
                    let (c, rr) = if horizontal { (col as isize + k, row as isize) } else { (col as isize, row as isize + k) };
                    if c < 0 || rr < 0 || c >= w as isize || rr >= h as isize || !src[rr as usize * w + c as usize] {
                        keep = false;
                        break;
                    }
                }
                out[row * w + col] = keep;
            }
        }
        out
    };
    let rows = pass(&mask.bits, true);
    Mask { width: w, height: h, bits: pass(&rows, false) }
}

/// Mean of the masked, non-NaN pixels of each grid. `None` marks a timestep
/// where every masked pixel is no-data.
pub fn reduce_plot(mask: &Mask, grids: &[&Grid]) -> Result<Vec<Option<f64>>> {
    if mask.is_empty() {
        return Err(Error::PlotTooSmall("<unnamed>".into()));
    }
    let idx: Vec<usize> = mask.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect();
    let mut out = Vec::with_capacity(grids.len());
    for g in grids {
        if g.width != mask.width || g.height != mask.height {
            return Err(Error::GridMismatch(format!("grid {}x{} vs mask {}x{}", g.width, g.height, mask.width, mask.height)));
        }
        let (mut sum, mut n) = (0.0f64, 0usize);
        for &i in &idx {
            let v = g.values[i];
            if !v.is_nan() {
                sum += f64::from(v);
                n += 1;
            }
        }
        out.push(if n > 0 { Some(sum / n as f64) } else { None });
    }
    Ok(out)
}

/// Keep polygons whose area lies in the closed interval `[min_m2, max_m2]`.
pub fn size_filter(polys: Vec<PlotPolygon>, min_m2: f64, max_m2: f64) -> Vec<PlotPolygon> {
    polys.into_iter().filter(|p| (min_m2..=max_m2).contains(&p.area())).collect()
}

/// Build a plot series from a grid stack: rasterize, erode, reduce every band,
/// keep only the days where every band has data.
pub fn reduce_polygon(poly: &PlotPolygon, stack: &GridStack, buffer_px: usize) -> Result<PlotSeries> {
    let reference = stack
        .values()
        .flat_map(|v| v.first())
        .map(|(_, g)| g)
        .next()
        .ok_or_else(|| Error::Input("empty grid stack".into()))?;
    for layers in stack.values() {
        if let Some((_, g)) = layers.iter().find(|(_, g)| !g.congruent(reference)) {
            return Err(Error::GridMismatch(format!("grid {}x{} not congruent with stack", g.width, g.height)));
        }
    }
    let mask = erode(&rasterize(poly, reference)?, buffer_px);
    if mask.is_empty() {
        return Err(Error::PlotTooSmall(poly.plot_id.clone()));
    }
    let mut per_band: BTreeMap<Band, BTreeMap<Day, f64>> = BTreeMap::new();
    for (band, layers) in stack {
        let grids: Vec<&Grid> = layers.iter().map(|(_, g)| g).collect();
        let means = reduce_plot(&mask, &grids)?;
        let entry = per_band.entry(*band).or_default();
        for ((day, _), m) in layers.iter().zip(means) {
            if let Some(v) = m {
                entry.insert(*day, v);
            }
        }
    }
    let common: Vec<Day> = match per_band.values().next() {
        Some(first) => first.keys().copied().filter(|d| per_band.values().all(|m| m.contains_key(d))).collect(),
        None => Vec::new(),
    };
    let bands = per_band
        .into_iter()
        .map(|(band, m)| {
            let acqs = common.iter().map(|d| Acquisition::new(*d, m[d])).collect::<Result<Vec<_>>>()?;
            Ok((band, acqs))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    PlotSeries::new(poly.plot_id.clone(), poly.district.clone(), poly.area(), bands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid10(w: usize, h: usize) -> Grid {
        // Top-left at (0, h*10) so the grid covers [0, 10w] x [0, 10h].
        Grid::filled(w, h, 10.0, (0.0, h as f64 * 10.0), 0.0).unwrap()
    }

    fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> Mask {
        Mask { width: w, height: h, bits: (0..w * h).map(|_| rng.random_bool(density)).collect() }
    }

    fn brute_erode(m: &Mask, r: usize) -> Mask {
        let r = r as isize;
        let mut out = Mask::empty(m.width, m.height);
        for row in 0..m.height as isize {
            for col in 0..m.width as isize {
                let mut keep = true;
                for dr in -r..=r {
                    for dc in -r..=r {
                        let (c, rr) = (col + dc, row + dr);
                        if c < 0 || rr < 0 || c >= m.width as isize || rr >= m.height as isize || !m.get(c as usize, rr as usize) {
                            keep = false;
                        }
                    }
                }
                out.bits[row as usize * m.width + col as usize] = keep;
            }
        }
        out
    }

    #[test]
    fn square_30m_covers_nine_pixels() {
        let g = grid10(10, 10);
        let p = PlotPolygon::square("a", "d", 20.0, 20.0, 30.0).unwrap();
        assert_eq!(rasterize(&p, &g).unwrap().count(), 9);
    }

    #[test]
    fn outside_is_empty_mask() {
        let g = grid10(5, 5);
        let p = PlotPolygon::square("a", "d", 500.0, 500.0, 30.0).unwrap();
        assert!(matches!(rasterize(&p, &g), Err(Error::EmptyMask)));
    }

    #[test]
    fn triangle_matches_brute_force() {
        let g = grid10(6, 6);
        let tri = PlotPolygon::new("t", "d", vec![(10.0, 10.0), (45.0, 10.0), (10.0, 45.0), (10.0, 10.0)], vec![]).unwrap();
        let mask = rasterize(&tri, &g).unwrap();
        for row in 0..6 {
            for col in 0..6 {
                let (x, y) = g.pixel_center(col, row);
                // Oracle: the half-plane form of this triangle.
                let inside = x > 10.0 && y > 10.0 && x + y < 55.0;
                assert_eq!(mask.get(col, row), inside, "pixel ({col},{row})");
            }
        }
        assert_eq!(mask.count(), 6);
    }

    #[test]
    fn hole_is_excluded() {
        let g = grid10(10, 10);
        let ext = vec![(0.0, 0.0), (50.0, 0.0), (50.0, 50.0), (0.0, 50.0), (0.0, 0.0)];
        let hole = vec![(20.0, 20.0), (30.0, 20.0), (30.0, 30.0), (20.0, 30.0), (20.0, 20.0)];
        let p = PlotPolygon::new("h", "d", ext, vec![hole]).unwrap();
        assert_eq!(p.area(), 2400.0);
        assert_eq!(rasterize(&p, &g).unwrap().count(), 24);
    }

    #[test]
    fn invalid_rings_rejected() {
        let bowtie = vec![(0.0, 0.0), (10.0, 10.0), (10.0, 0.0), (0.0, 10.0), (0.0, 0.0)];
        assert!(PlotPolygon::new("b", "d", bowtie, vec![]).is_err());
        let open = vec![(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)];
        assert!(PlotPolygon::new("o", "d", open, vec![]).is_err());
    }

    #[test]
    fn erode_examples() {
        let full = Mask { width: 3, height: 3, bits: vec![true; 9] };
        let e = erode(&full, 1);
        assert_eq!(e.count(), 1);
        assert!(e.get(1, 1));
        assert_eq!(erode(&full, 0), full);
    }

    #[test]
    fn erode_matches_brute_force_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = random_mask(&mut rng, 32, 32, 0.8);
            assert_eq!(erode(&m, 1), brute_erode(&m, 1));
        }
    }

    #[test]
    fn reduce_examples() {
        let mut g = grid10(2, 1);
        g.values = vec![-10.0, -12.0];
        let m = Mask { width: 2, height: 1, bits: vec![true, true] };
        assert_eq!(reduce_plot(&m, &[&g]).unwrap(), vec![Some(-11.0)]);
        g.values = vec![f32::NAN, -12.0];
        assert_eq!(reduce_plot(&m, &[&g]).unwrap(), vec![Some(-12.0)]);
        g.values = vec![f32::NAN, f32::NAN];
        assert_eq!(reduce_plot(&m, &[&g]).unwrap(), vec![None]);
        assert!(matches!(reduce_plot(&Mask::empty(2, 1), &[&g]), Err(Error::PlotTooSmall(_))));
    }

    #[test]
    fn size_filter_bounds() {
        let side = |a: f64| a.sqrt();
        let polys = vec![
            PlotPolygon::square("small", "d", 0.0, 0.0, side(1500.0)).unwrap(),
            PlotPolygon::new("exact", "d", vec![(0.0, 0.0), (40.0, 0.0), (40.0, 50.0), (0.0, 50.0), (0.0, 0.0)], vec![]).unwrap(),
            PlotPolygon::square("big", "d", 0.0, 0.0, side(120_000.0)).unwrap(),
            PlotPolygon::square("mid", "d", 0.0, 0.0, 100.0).unwrap(),
        ];
        let kept: Vec<String> = size_filter(polys, DEFAULT_MIN_AREA_M2, DEFAULT_MAX_AREA_M2).into_iter().map(|p| p.plot_id).collect();
        assert_eq!(kept, vec!["exact", "mid"]);
    }

    proptest! {
        #[test]
        fn erosion_is_additive(seed in 0u64..1000, a in 0usize..3, b in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_mask(&mut rng, 16, 16, 0.85);
            prop_assert_eq!(erode(&m, a + b), erode(&erode(&m, a), b));
        }

        #[test]
        fn shoelace_rotation_invariant(pts in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 3..8), rot in 0usize..8) {
            // Star-shaped ring around the centroid: sort by angle.
            let cx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
            let cy = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
            let mut ring = pts.clone();
            ring.sort_by(|a, b| (a.1 - cy).atan2(a.0 - cx).total_cmp(&(b.1 - cy).atan2(b.0 - cx)));
            let mut closed = ring.clone();
            closed.push(ring[0]);
            let k = rot % ring.len();
            let mut rotated: Vec<_> = ring[k..].iter().chain(&ring[..k]).copied().collect();
            rotated.push(rotated[0]);
            let a1 = ring_signed_area(&closed).abs();
            let a2 = ring_signed_area(&rotated).abs();
            prop_assert!((a1 - a2).abs() <= 1e-9 * (1.0 + a1));
        }

        #[test]
        fn mean_within_masked_range(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_mask(&mut rng, 8, 8, 0.5);
            prop_assume!(!m.is_empty());
            let mut g = grid10(8, 8);
            g.values = (0..64).map(|_| rng.random_range(-25.0f32..0.0)).collect();
            let mean = reduce_plot(&m, &[&g]).unwrap()[0].unwrap();
            let vals: Vec<f64> = (0..64).filter(|i| m.bits[*i]).map(|i| f64::from(g.values[i])).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(mean >= lo - 1e-9 && mean <= hi + 1e-9);
        }
    }
}
