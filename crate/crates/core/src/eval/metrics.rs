use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_test: usize,
    pub overall_accuracy: f64,
    pub f1_weighted: f64,
    pub f1_macro: f64,
    /// One entry per class index in `0..n_classes`.
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[true][pred]`.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize, what: &str, class: usize) -> f64 {
    if den == 0 {
        log::warn!("{what} of class {class} has a zero denominator; defined as 0");
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, per-class precision/recall/F1 and their macro and
/// support-weighted means. Macro F1 averages over classes that occur in either
/// the truth or the predictions.
pub fn classification_metrics(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<MetricsReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Input(format!("{} true labels vs {} predictions", y_true.len(), y_pred.len())));
    }
    if y_true.is_empty() {
        return Err(Error::Input("no samples to score".into()));
    }
    let k = y_true.iter().chain(y_pred).map(|c| c + 1).max().unwrap_or(0).max(n_classes);
    let mut confusion = vec![vec![0usize; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[t][p] += 1;
    }
    let n = y_true.len();
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let mut per_class = Vec::with_capacity(k);
    let (mut weighted, mut macro_sum, mut macro_n) = (0.0, 0.0, 0usize);
    for c in 0..k {
        let tp = confusion[c][c];
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[c]).sum();
        if support == 0 && predicted == 0 {
            per_class.push(ClassMetrics { class: c, support, precision: 0.0, recall: 0.0, f1: 0.0 });
            continue;
        }
        let precision = ratio(tp, predicted, "precision", c);
        let recall = ratio(tp, support, "recall", c);
        let f1 = ratio(2 * tp, support + predicted, "F1", c);
        weighted += f1 * support as f64;
        macro_sum += f1;
        macro_n += 1;
        per_class.push(ClassMetrics { class: c, support, precision, recall, f1 });
    }
    Ok(MetricsReport {
        n_test: n,
        overall_accuracy: correct as f64 / n as f64,
        f1_weighted: weighted / n as f64,
        f1_macro: macro_sum / macro_n as f64,
        per_class,
        confusion,
    })
}

pub fn weighted_f1(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    Ok(classification_metrics(y_true, y_pred, n_classes)?.f1_weighted)
}

/// Sample Pearson correlation, clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Input(format!("pearson inputs differ in length: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("need at least two pairs".into()));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Extrapolated rank-biased overlap of two equal-length, duplicate-free
/// rankings.
pub fn rbo<T: Eq + std::hash::Hash + std::fmt::Debug>(a: &[T], b: &[T], p: f64) -> Result<f64> {
    use std::collections::HashSet;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Input(format!("rbo persistence must lie in (0, 1), got {p}")));
    }
    if a.len() != b.len() {
        return Err(Error::Input(format!("rbo needs equal-length rankings, got {} and {}", a.len(), b.len())));
    }
    for r in [a, b] {
        if r.iter().collect::<HashSet<_>>().len() != r.len() {
            return Err(Error::Input("ranking contains duplicates".into()));
        }
    }
    let k = a.len();
    if k == 0 {
        return Err(Error::Input("empty rankings".into()));
    }
    let (mut seen_a, mut seen_b) = (HashSet::new(), HashSet::new());
    let mut overlap = 0usize;
    let mut sum = 0.0;
    let mut weight = 1.0;
    for d in 1..=k {
        let (x, y) = (&a[d - 1], &b[d - 1]);
        if x == y {
            overlap += 1;
        } else {
            if seen_b.contains(x) {
                overlap += 1;
            }
            if seen_a.contains(y) {
                overlap += 1;
            }
        }
        seen_a.insert(x);
        seen_b.insert(y);
        weight *= p;
        sum += overlap as f64 / d as f64 * weight;
    }
    let agreement_k = overlap as f64 / k as f64;
    Ok(agreement_k * p.powi(k as i32) + (1.0 - p) / p * sum)
}

/// Among misclassified samples, the share originating from each original
/// class index. Empty when there are no errors.
pub fn error_by_origin(y_true: &[usize], y_pred: &[usize], origin: &[usize], n_origins: usize) -> Result<Vec<f64>> {
    if y_true.len() != y_pred.len() || y_true.len() != origin.len() {
        return Err(Error::Input("error_by_origin inputs must be aligned".into()));
    }
    let mut counts = vec![0usize; n_origins];
    let mut total = 0;
    for ((t, p), o) in y_true.iter().zip(y_pred).zip(origin) {
        if t != p {
            counts[*o] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Ok(Vec::new());
    }
    Ok(counts.into_iter().map(|c| c as f64 / total as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    /// Per-class F1 from explicit true/false positive counting.
    fn oracle_f1s(t: &[usize], p: &[usize], k: usize) -> Vec<(usize, f64)> {
        (0..k)
            .map(|c| {
                let tp = t.iter().zip(p).filter(|(a, b)| **a == c && **b == c).count() as f64;
                let fp = t.iter().zip(p).filter(|(a, b)| **a != c && **b == c).count() as f64;
                let fnn = t.iter().zip(p).filter(|(a, b)| **a == c && **b != c).count() as f64;
                let support = t.iter().filter(|a| **a == c).count();
                let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fnn) };
                (support, f1)
            })
            .collect()
    }

    #[test]
    fn perfect_and_all_wrong() {
        let r = classification_metrics(&[0, 1, 1, 0], &[0, 1, 1, 0], 2).unwrap();
        assert_eq!((r.overall_accuracy, r.f1_weighted, r.f1_macro), (1.0, 1.0, 1.0));
        let r = classification_metrics(&[0, 1, 1, 0], &[1, 0, 0, 1], 2).unwrap();
        assert_eq!((r.overall_accuracy, r.f1_weighted, r.f1_macro), (0.0, 0.0, 0.0));
        assert!(classification_metrics(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn random_three_class_matches_oracle() {
        let mut rng = rng_from_seed(17);
        let t: Vec<usize> = (0..50).map(|_| rng.random_range(0..3)).collect();
        let p: Vec<usize> = (0..50).map(|_| rng.random_range(0..3)).collect();
        let r = classification_metrics(&t, &p, 3).unwrap();
        let o = oracle_f1s(&t, &p, 3);
        let w: f64 = o.iter().map(|(s, f)| *s as f64 * f).sum::<f64>() / 50.0;
        let m: f64 = o.iter().map(|(_, f)| f).sum::<f64>() / 3.0;
        assert!((r.f1_weighted - w).abs() < 1e-12 && (r.f1_macro - m).abs() < 1e-12);
        let rows: Vec<usize> = r.confusion.iter().map(|row| row.iter().sum()).collect();
        assert_eq!(rows, o.iter().map(|(s, _)| *s).collect::<Vec<_>>());
    }

    #[test]
    fn pearson_examples() {
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let y2: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y2).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        let y = [2.0, 4.0, 5.0, 4.0, 5.0, 7.0, 8.0, 9.0, 10.0, 12.0];
        // Integer moment sums: n*Sxy - Sx*Sy = 830, n*Sxx - Sx^2 = 825, n*Syy - Sy^2 = 884.
        let hand = 830.0 / (825.0f64 * 884.0).sqrt();
        assert!((pearson(&x, &y).unwrap() - hand).abs() < 1e-12);
        assert!(matches!(pearson(&x, &[3.0; 10]), Err(Error::UndefinedCorrelation(_))));
    }

    #[test]
    fn rbo_examples() {
        assert!((rbo(&[1, 2, 3], &[1, 2, 3], 0.9).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(rbo(&[1, 2, 3], &[4, 5, 6], 0.95).unwrap(), 0.0);
        // Prefix agreements 0, 1, 1 collapse the sum to exactly p.
        assert!((rbo(&[1, 2, 3], &[2, 1, 3], 0.95).unwrap() - 0.95).abs() < 1e-12);
        assert!(rbo(&[1, 1, 2], &[1, 2, 3], 0.95).is_err());
    }

    #[test]
    fn error_origin_shares() {
        assert!(error_by_origin(&[0, 1], &[0, 1], &[0, 2], 3).unwrap().is_empty());
        assert_eq!(error_by_origin(&[0, 1, 0], &[1, 1, 1], &[2, 1, 2], 3).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn metrics_permutation_invariant(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..60), seed in 0u64..1000) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
            let mut idx: Vec<usize> = (0..t.len()).collect();
            rand::seq::SliceRandom::shuffle(&mut idx[..], &mut rng_from_seed(seed));
            let t2: Vec<usize> = idx.iter().map(|&i| t[i]).collect();
            let p2: Vec<usize> = idx.iter().map(|&i| p[i]).collect();
            let a = classification_metrics(&t, &p, 3).unwrap();
            let b = classification_metrics(&t2, &p2, 3).unwrap();
            prop_assert_eq!(a.confusion.clone(), b.confusion.clone());
            prop_assert!((a.f1_weighted - b.f1_weighted).abs() < 1e-12);
            prop_assert_eq!(a.confusion.iter().flatten().sum::<usize>(), t.len());
        }

        #[test]
        fn macro_equals_weighted_with_equal_support(preds in prop::collection::vec(0usize..3, 30)) {
            let t: Vec<usize> = (0..30).map(|i| i % 3).collect();
            let r = classification_metrics(&t, &preds, 3).unwrap();
            prop_assert!((r.f1_macro - r.f1_weighted).abs() < 1e-12);
        }

        #[test]
        fn rbo_symmetric_and_reflexive(perm in Just((0..8).collect::<Vec<u32>>()).prop_shuffle(), p in 0.05f64..0.99) {
            let base: Vec<u32> = (0..8).collect();
            prop_assert!((rbo(&base, &base, p).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((rbo(&base, &perm, p).unwrap() - rbo(&perm, &base, p).unwrap()).abs() < 1e-12);
        }
    }
}
