//! Gradient boosting with logistic loss on histogram-binned features.

use super::binning::BinnedMatrix;
use super::tree::Tree;

pub const L2_REG: f64 = 1.0;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy)]
pub struct BoostParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub learning_rate: f64,
}

pub fn sigmoid(f: f64) -> f64 {
    if f >= 0.0 {
        1.0 / (1.0 + (-f).exp())
    } else {
        let e = f.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss for raw scores `f` and 0/1 targets.
pub fn logistic_loss(f: &[f64], y: &[bool]) -> f64 {
    let softplus = |z: f64| if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    f.iter().zip(y).map(|(&fi, &yi)| softplus(fi) - if yi { fi } else { 0.0 }).sum::<f64>() / f.len() as f64
}

/// Regression tree on gradient statistics. Returns the tree (Newton leaf
/// values, unscaled) and each row's leaf value.
fn fit_tree(x: &BinnedMatrix, g: &[f64], h: &[f64], p: &BoostParams) -> (Tree, Vec<f64>) {
    let mut tree = Tree::new(1);
    let mut row_value = vec![0.0; x.n_rows];
    let root: Vec<u32> = (0..x.n_rows as u32).collect();
    let mut stack = vec![(tree.push_leaf(&[0.0]), root, 0usize)];
    let gain_of = |gs: f64, hs: f64| gs * gs / (hs + L2_REG);
    let mut hist_g = Vec::new();
    let mut hist_h = Vec::new();
    let mut hist_n = Vec::new();
    while let Some((node, idx, depth)) = stack.pop() {
        let (gs, hs) = idx.iter().fold((0.0, 0.0), |(a, b), &i| (a + g[i as usize], b + h[i as usize]));
        let leaf = -gs / (hs + L2_REG);
        tree.value[node] = leaf;
        if depth >= p.max_depth || idx.len() < 2 * p.min_leaf {
            for &i in &idx {
                row_value[i as usize] = leaf;
            }
            continue;
        }
        let parent = gain_of(gs, hs);
        let mut best: Option<(usize, usize, f64)> = None;
        for j in 0..x.n_cols {
            let nb = x.n_bins(j);
            let col = x.column(j);
            hist_g.clear();
            hist_g.resize(nb, 0.0);
            hist_h.clear();
            hist_h.resize(nb, 0.0);
            hist_n.clear();
            hist_n.resize(nb, 0usize);
            for &i in &idx {
                let b = col[i as usize] as usize;
                hist_g[b] += g[i as usize];
                hist_h[b] += h[i as usize];
                hist_n[b] += 1;
            }
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
            for b in 0..nb - 1 {
                gl += hist_g[b];
                hl += hist_h[b];
                nl += hist_n[b];
                let nr = idx.len() - nl;
                if hist_n[b] == 0 || nl < p.min_leaf || nr < p.min_leaf {
                    continue;
                }
                let gain = gain_of(gl, hl) + gain_of(gs - gl, hs - hl) - parent;
                if gain > 1e-12 && best.is_none_or(|(_, _, bg)| gain > bg) {
                    best = Some((j, b, gain));
                }
            }
        }
        let Some((j, b, _)) = best else {
            for &i in &idx {
                row_value[i as usize] = leaf;
            }
            continue;
        };
        let col = x.column(j);
        let (l, r): (Vec<u32>, Vec<u32>) = idx.iter().partition(|&&i| (col[i as usize] as usize) <= b);
        let (ln, rn) = (tree.push_leaf(&[0.0]), tree.push_leaf(&[0.0]));
        tree.make_split(node, j, x.edges[j][b], ln, rn);
        tree.value[node] = 0.0;
        stack.push((rn, r, depth + 1));
        stack.push((ln, l, depth + 1));
    }
    (tree, row_value)
}

/// Binary booster output.
#[derive(Debug, Clone)]
pub struct Booster {
    pub init: f64,
    pub trees: Vec<Tree>,
    /// Mean training loss before the first round and after each round.
    pub loss: Vec<f64>,
}

/// Boost on 0/1 targets. Each round takes a shrunken Newton step and halves
/// it while the training loss would rise, so the logged loss never increases.
pub fn fit_booster(x: &BinnedMatrix, y: &[bool], p: &BoostParams) -> Booster {
    let n = y.len();
    let pos = y.iter().filter(|v| **v).count() as f64;
    let prior = (pos / n as f64).clamp(1e-6, 1.0 - 1e-6);
    let init = (prior / (1.0 - prior)).ln();
    let mut f = vec![init; n];
    let mut loss = vec![logistic_loss(&f, y)];
    let mut trees = Vec::with_capacity(p.n_trees);
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    for _ in 0..p.n_trees {
        for i in 0..n {
            let pi = sigmoid(f[i]);
            g[i] = pi - if y[i] { 1.0 } else { 0.0 };
            h[i] = (pi * (1.0 - pi)).max(1e-12);
        }
        let (mut tree, row_value) = fit_tree(x, &g, &h, p);
        let current = *loss.last().unwrap();
        let mut scale = p.learning_rate;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            if scale == 0.0 {
                break;
            }
            let cand: Vec<f64> = f.iter().zip(&row_value).map(|(a, v)| a + scale * v).collect();
            let l = logistic_loss(&cand, y);
            if l <= current {
                accepted = Some((cand, l));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((cand, l)) => {
                f = cand;
                tree.scale_values(scale);
                loss.push(l);
            }
            None => {
                tree.scale_values(0.0);
                loss.push(current);
            }
        }
        trees.push(tree);
    }
    Booster { init, trees, loss }
}

pub fn booster_score(init: f64, trees: &[Tree], row: &[f64]) -> f64 {
    init + trees.iter().map(|t| t.leaf_value(row)[0]).sum::<f64>()
}
