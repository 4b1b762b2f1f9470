//! Per-feature quantile binning of a training matrix.

/// Column-major bin codes plus the split thresholds between bins. A value `x`
/// falls in bin `b` when exactly `b` edges lie strictly below it, so
/// `x <= edges[b]` is equivalent to `bin(x) <= b`.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub codes: Vec<u8>,
    pub edges: Vec<Vec<f64>>,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

fn column_edges(mut col: Vec<f64>, max_bins: usize) -> Vec<f64> {
    col.retain(|v| !v.is_nan());
    col.sort_by(f64::total_cmp);
    let mut uniq = col.clone();
    uniq.dedup();
    if uniq.len() <= max_bins {
        return uniq.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    let n = col.len();
    let mut edges: Vec<f64> = Vec::with_capacity(max_bins - 1);
    for q in 1..max_bins {
        let v = col[q * n / max_bins];
        // Edge between v and the next larger distinct value.
        let pos = uniq.partition_point(|u| *u <= v);
        if pos < uniq.len() {
            let e = midpoint(v, uniq[pos]);
            if edges.last().is_none_or(|last| *last < e) {
                edges.push(e);
            }
        }
    }
    edges
}

impl BinnedMatrix {
    /// `rows` is row-major with `n_cols` values per row.
    pub fn build(rows: &[f64], n_cols: usize, max_bins: usize) -> Self {
        assert!((2..=256).contains(&max_bins));
        let n_rows = rows.len() / n_cols;
        let mut codes = vec![0u8; n_rows * n_cols];
        let mut edges = Vec::with_capacity(n_cols);
        for j in 0..n_cols {
            let col: Vec<f64> = (0..n_rows).map(|i| rows[i * n_cols + j]).collect();
            let e = column_edges(col.clone(), max_bins);
            for (i, v) in col.iter().enumerate() {
                codes[j * n_rows + i] = e.partition_point(|x| x < v) as u8;
            }
            edges.push(e);
        }
        Self { n_rows, n_cols, codes, edges }
    }

    pub fn column(&self, j: usize) -> &[u8] {
        &self.codes[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn n_bins(&self, j: usize) -> usize {
        self.edges[j].len() + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn threshold_and_code_agree(vals in prop::collection::vec(-50.0f64..50.0, 2..300), max_bins in 2usize..64) {
            let m = BinnedMatrix::build(&vals, 1, max_bins);
            prop_assert!(m.n_bins(0) <= max_bins);
            for (i, v) in vals.iter().enumerate() {
                let code = m.column(0)[i] as usize;
                for (b, e) in m.edges[0].iter().enumerate() {
                    prop_assert_eq!(*v <= *e, code <= b);
                }
            }
        }
    }

    #[test]
    fn few_distinct_values_get_own_bins() {
        let m = BinnedMatrix::build(&[3.0, 1.0, 2.0, 1.0, -9999.0], 1, 64);
        assert_eq!(m.edges[0], vec![-4999.0, 1.5, 2.5]);
        assert_eq!(m.column(0), &[3, 1, 2, 1, 0]);
    }
}
