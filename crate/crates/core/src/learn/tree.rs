use serde::{Deserialize, Serialize};

/// Binary decision tree in node arrays. Node 0 is the root; a node is a leaf
/// when `feature[i] < 0`. Rows with `x[feature] <= threshold` go left.
/// Each node owns `n_outputs` consecutive entries of `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub n_outputs: usize,
    pub feature: Vec<i32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub value: Vec<f64>,
}

impl Tree {
    pub fn new(n_outputs: usize) -> Self {
        Self { n_outputs, feature: Vec::new(), threshold: Vec::new(), left: Vec::new(), right: Vec::new(), value: Vec::new() }
    }

    pub fn n_nodes(&self) -> usize {
        self.feature.len()
    }

    pub(crate) fn push_leaf(&mut self, value: &[f64]) -> usize {
        debug_assert_eq!(value.len(), self.n_outputs);
        self.feature.push(-1);
        self.threshold.push(0.0);
        self.left.push(0);
        self.right.push(0);
        self.value.extend_from_slice(value);
        self.feature.len() - 1
    }

    pub(crate) fn make_split(&mut self, node: usize, feature: usize, threshold: f64, left: usize, right: usize) {
        self.feature[node] = feature as i32;
        self.threshold[node] = threshold;
        self.left[node] = left as u32;
        self.right[node] = right as u32;
    }

    pub fn leaf_value(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        while self.feature[i] >= 0 {
            i = if x[self.feature[i] as usize] <= self.threshold[i] { self.left[i] } else { self.right[i] } as usize;
        }
        &self.value[i * self.n_outputs..(i + 1) * self.n_outputs]
    }

    pub fn depth(&self) -> usize {
        fn rec(t: &Tree, i: usize) -> usize {
            if t.feature[i] < 0 {
                0
            } else {
                1 + rec(t, t.left[i] as usize).max(rec(t, t.right[i] as usize))
            }
        }
        if self.feature.is_empty() {
            0
        } else {
            rec(self, 0)
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        self.feature.iter().filter(|f| **f >= 0).map(|f| *f as usize).max()
    }

    pub(crate) fn scale_values(&mut self, factor: f64) {
        for v in &mut self.value {
            *v *= factor;
        }
    }
}
