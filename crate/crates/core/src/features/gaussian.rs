use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::ResampledSeries;

const MAX_ITER: usize = 200;
const REL_TOL: f64 = 1e-10;
const LAMBDA_MAX: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFitParams {
    pub amplitude: f64,
    pub peak_day: f64,
    pub sigma_days: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub params: GaussianFitParams,
    pub converged: bool,
    pub iterations: usize,
}

fn model(p: [f64; 3], t: f64) -> f64 {
    let z = (t - p[1]) / p[2];
    p[0] * (-0.5 * z * z).exp()
}

fn sse(p: [f64; 3], t: &[f64], y: &[f64]) -> f64 {
    t.iter().zip(y).map(|(&ti, &yi)| (yi - model(p, ti)).powi(2)).sum()
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Least-squares fit of `A exp(-(t - mu)^2 / (2 sigma^2))` over window-relative
/// days using Levenberg-Marquardt damping.
pub fn fit_gaussian(series: &ResampledSeries) -> Result<GaussianFit> {
    let y = &series.values;
    let n = y.len();
    if n < 5 {
        return Err(Error::InsufficientData { needed: 5, got: n });
    }
    let t: Vec<f64> = (0..n).map(|i| series.t_rel(i)).collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst <= 1e-12 * (1.0 + mean * mean) * n as f64 {
        return Err(Error::DegenerateFit(format!("{} series is constant", series.band)));
    }
    let imax = (0..n).fold(0, |b, i| if y[i] > y[b] { i } else { b });
    let span = t[n - 1] - t[0];
    let mut p = [y[imax], t[imax], span / 6.0];
    let mut cur = sse(p, &t, y);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&ti, &yi) in t.iter().zip(y) {
            let z = (ti - p[1]) / p[2];
            let e = (-0.5 * z * z).exp();
            let j = [e, p[0] * e * z / p[2], p[0] * e * z * z / p[2]];
            let r = yi - p[0] * e;
            for a in 0..3 {
                jtr[a] += j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut stepped = false;
        while lambda <= LAMBDA_MAX {
            let mut damped = jtj;
            for (d, row) in damped.iter_mut().enumerate() {
                row[d] += lambda * jtj[d][d].max(1e-12);
            }
            if let Some(delta) = solve3(damped, jtr) {
                let cand = [p[0] + delta[0], p[1] + delta[1], p[2] + delta[2]];
                if cand[2] > 0.0 && cand.iter().all(|v| v.is_finite()) {
                    let next = sse(cand, &t, y);
                    if next < cur {
                        let rel = (cur - next) / cur.max(f64::MIN_POSITIVE);
                        p = cand;
                        cur = next;
                        lambda = (lambda / 10.0).max(1e-12);
                        stepped = true;
                        if rel < REL_TOL || cur == 0.0 {
                            converged = true;
                        }
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        // No downhill step at any damping: the point is stationary.
        if !stepped {
            converged = true;
        }
        if converged {
            break;
        }
    }
    let params = GaussianFitParams { amplitude: p[0], peak_day: p[1], sigma_days: p[2], r_squared: 1.0 - cur / sst };
    Ok(GaussianFit { params, converged, iterations })
}
