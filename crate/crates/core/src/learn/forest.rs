//! Bagged CART classification trees with Gini impurity.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::binning::BinnedMatrix;
use super::tree::Tree;
use crate::rng::{derive_seed, rng_from_seed};

/// Below this many samples a node sorts its codes instead of filling a
/// full histogram.
const SORT_BELOW: usize = 96;

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub max_features: usize,
}

struct Split {
    feature: usize,
    bin: usize,
    score: f64,
}

struct Builder<'a> {
    x: &'a BinnedMatrix,
    y: &'a [usize],
    n_classes: usize,
    p: ForestParams,
    hist: Vec<usize>,
    pairs: Vec<(u8, usize)>,
}

impl Builder<'_> {
    /// Sum over sides of `sum_c n_c^2 / n`, which grows as weighted Gini falls.
    fn side_score(counts: &[usize], n: usize) -> f64 {
        counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / n as f64
    }

    fn scan(&self, feature: usize, bins: &[(usize, &[usize])], total: &[usize], n: usize, best: &mut Option<Split>) {
        let k = self.n_classes;
        let mut left = vec![0usize; k];
        let mut n_left = 0;
        let mut right = total.to_vec();
        for (i, &(bin, counts)) in bins.iter().enumerate() {
            if i + 1 == bins.len() {
                break;
            }
            for c in 0..k {
                left[c] += counts[c];
                right[c] -= counts[c];
            }
            n_left += counts.iter().sum::<usize>();
            let n_right = n - n_left;
            if n_left < self.p.min_leaf || n_right < self.p.min_leaf {
                continue;
            }
            let score = Self::side_score(&left, n_left) + Self::side_score(&right, n_right);
            if best.as_ref().is_none_or(|b| score > b.score) {
                *best = Some(Split { feature, bin, score });
            }
        }
    }

    fn evaluate_feature(&mut self, j: usize, idx: &[u32], total: &[usize], best: &mut Option<Split>) {
        let k = self.n_classes;
        let col = self.x.column(j);
        if idx.len() < SORT_BELOW {
            self.pairs.clear();
            self.pairs.extend(idx.iter().map(|&i| (col[i as usize], self.y[i as usize])));
            self.pairs.sort_unstable();
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            for &(b, c) in &self.pairs {
                match groups.last_mut() {
                    Some((gb, counts)) if *gb == b as usize => counts[c] += 1,
                    _ => {
                        let mut counts = vec![0; k];
                        counts[c] = 1;
                        groups.push((b as usize, counts));
                    }
                }
            }
            let view: Vec<(usize, &[usize])> = groups.iter().map(|(b, c)| (*b, c.as_slice())).collect();
            self.scan(j, &view, total, idx.len(), best);
        } else {
            let nb = self.x.n_bins(j);
            self.hist.clear();
            self.hist.resize(nb * k, 0);
            for &i in idx {
                self.hist[col[i as usize] as usize * k + self.y[i as usize]] += 1;
            }
            let hist = std::mem::take(&mut self.hist);
            let view: Vec<(usize, &[usize])> =
                (0..nb).map(|b| (b, &hist[b * k..(b + 1) * k])).filter(|(_, c)| c.iter().any(|v| *v > 0)).collect();
            self.scan(j, &view, total, idx.len(), best);
            self.hist = hist;
        }
    }

    fn majority(counts: &[usize]) -> usize {
        (0..counts.len()).fold(0, |b, c| if counts[c] > counts[b] { c } else { b })
    }

    fn build(&mut self, sample: Vec<u32>, rng: &mut ChaCha8Rng) -> Tree {
        let mut tree = Tree::new(1);
        let mut features: Vec<usize> = (0..self.x.n_cols).collect();
        let mut stack = vec![(tree.push_leaf(&[0.0]), sample, 0usize)];
        while let Some((node, idx, depth)) = stack.pop() {
            let mut total = vec![0usize; self.n_classes];
            for &i in &idx {
                total[self.y[i as usize]] += 1;
            }
            tree.value[node] = Self::majority(&total) as f64;
            let pure = total.iter().filter(|c| **c > 0).count() <= 1;
            if pure || depth >= self.p.max_depth || idx.len() < 2 * self.p.min_leaf {
                continue;
            }
            // Visit features in random order; look past max_features only
            // while no valid split has been found.
            features.shuffle(rng);
            let mut best = None;
            for (visited, &j) in features.iter().enumerate() {
                if visited >= self.p.max_features && best.is_some() {
                    break;
                }
                self.evaluate_feature(j, &idx, &total, &mut best);
            }
            let Some(split) = best else { continue };
            let col = self.x.column(split.feature);
            let (l, r): (Vec<u32>, Vec<u32>) = idx.iter().partition(|&&i| (col[i as usize] as usize) <= split.bin);
            let (ln, rn) = (tree.push_leaf(&[0.0]), tree.push_leaf(&[0.0]));
            tree.make_split(node, split.feature, self.x.edges[split.feature][split.bin], ln, rn);
            stack.push((rn, r, depth + 1));
            stack.push((ln, l, depth + 1));
        }
        tree
    }
}

/// Each leaf stores its majority class index.
pub fn fit_forest(x: &BinnedMatrix, y: &[usize], n_classes: usize, p: ForestParams, seed: u64) -> Vec<Tree> {
    (0..p.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, t as u64));
            let n = x.n_rows;
            let sample: Vec<u32> = (0..n).map(|_| rng.random_range(0..n as u32)).collect();
            let mut b = Builder { x, y, n_classes, p, hist: Vec::new(), pairs: Vec::new() };
            b.build(sample, &mut rng)
        })
        .collect()
}

/// Vote shares per class; argmax ties resolve to the lower class index.
pub fn forest_scores(trees: &[Tree], n_classes: usize, row: &[f64]) -> Vec<f64> {
    let mut votes = vec![0.0; n_classes];
    for t in trees {
        votes[t.leaf_value(row)[0] as usize] += 1.0;
    }
    let n = trees.len().max(1) as f64;
    votes.iter().map(|v| v / n).collect()
}
