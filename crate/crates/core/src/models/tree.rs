//! Depth-limited binary trees shared by the forest and the boosting learner.
//!
//! Splits are found by exhaustive search over presorted columns. A row goes
//! left when its value is `<= cut`; cuts are midpoints between consecutive
//! distinct values. Both criteria are variance-type impurities: Gini for a
//! 0/1 target equals twice its variance.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::encoding::Matrix;
use crate::seed::Rng;

/// One node of a flattened tree. Leaves have `feature == None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: Option<usize>,
    pub cut: f64,
    pub left: usize,
    pub right: usize,
    pub value: f64,
    /// Share of the tree's training rows that reach this node.
    pub sample_fraction: f64,
    /// Impurity decrease of this node's split (0 for leaves).
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            let node = &self.nodes[k];
            match node.feature {
                None => return node.value,
                Some(j) => k = if row[j] <= node.cut { node.left } else { node.right },
            }
        }
    }

    /// Adds `gain * sample_fraction` of every split to its column.
    pub fn accumulate_importance(&self, out: &mut [f64]) {
        for node in &self.nodes {
            if let Some(j) = node.feature {
                out[j] += node.gain * node.sample_fraction;
            }
        }
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature.is_some()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Impurity {
    Gini,
    Variance,
}

impl Impurity {
    fn of(self, n: f64, sum: f64, sum_sq: f64) -> f64 {
        if n <= 0.0 {
            return 0.0;
        }
        let mean = sum / n;
        match self {
            Impurity::Gini => 2.0 * mean * (1.0 - mean),
            Impurity::Variance => (sum_sq / n - mean * mean).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Columns examined per node; `None` means all.
    pub features_per_node: Option<usize>,
}

const MIN_GAIN: f64 = 1e-12;

struct Grower<'a, L: Fn(&[usize]) -> f64> {
    x: &'a Matrix,
    target: &'a [f64],
    impurity: Impurity,
    params: GrowParams,
    leaf_value: L,
    total: f64,
    rng: Option<&'a mut Rng>,
    nodes: Vec<TreeNode>,
    mask: Vec<bool>,
}

struct Split {
    feature: usize,
    cut: f64,
    gain: f64,
}

/// Grows a tree on `rows` (indices into `x`, repeats allowed). `target` is
/// indexed like the rows of `x`.
pub fn grow<L: Fn(&[usize]) -> f64>(
    x: &Matrix,
    rows: &[usize],
    target: &[f64],
    impurity: Impurity,
    params: GrowParams,
    rng: Option<&mut Rng>,
    leaf_value: L,
) -> Tree {
    let sorted: Vec<Vec<usize>> = (0..x.cols)
        .map(|j| {
            let mut r = rows.to_vec();
            r.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)));
            r
        })
        .collect();
    let mut g = Grower {
        x,
        target,
        impurity,
        params,
        leaf_value,
        total: rows.len() as f64,
        rng,
        nodes: Vec::new(),
        mask: vec![false; x.rows],
    };
    g.node(rows.to_vec(), sorted, 0);
    Tree { nodes: g.nodes }
}

impl<L: Fn(&[usize]) -> f64> Grower<'_, L> {
    fn node(&mut self, rows: Vec<usize>, sorted: Vec<Vec<usize>>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            feature: None,
            cut: 0.0,
            left: 0,
            right: 0,
            value: (self.leaf_value)(&rows),
            sample_fraction: rows.len() as f64 / self.total,
            gain: 0.0,
        });
        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf {
            return id;
        }
        let Some(split) = self.best_split(&rows, &sorted) else {
            return id;
        };

        for &r in &rows {
            self.mask[r] = self.x.get(r, split.feature) <= split.cut;
        }
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.mask[r]);
        let mut left_sorted = Vec::with_capacity(sorted.len());
        let mut right_sorted = Vec::with_capacity(sorted.len());
        for list in sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = list.into_iter().partition(|&r| self.mask[r]);
            left_sorted.push(l);
            right_sorted.push(r);
        }
        let left = self.node(left_rows, left_sorted, depth + 1);
        let right = self.node(right_rows, right_sorted, depth + 1);
        let node = &mut self.nodes[id];
        node.feature = Some(split.feature);
        node.cut = split.cut;
        node.left = left;
        node.right = right;
        node.gain = split.gain;
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.x.cols;
        match (self.params.features_per_node, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < p => {
                let mut f = index::sample(rng, p, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize], sorted: &[Vec<usize>]) -> Option<Split> {
        let n = rows.len() as f64;
        let (sum, sum_sq) = rows.iter().fold((0.0, 0.0), |(s, q), &r| {
            let t = self.target[r];
            (s + t, q + t * t)
        });
        let parent = self.impurity.of(n, sum, sum_sq);
        if parent <= 0.0 {
            return None;
        }
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<Split> = None;
        for j in self.candidate_features() {
            let list = &sorted[j];
            let (mut ls, mut lq) = (0.0, 0.0);
            for k in 0..list.len() - 1 {
                let t = self.target[list[k]];
                ls += t;
                lq += t * t;
                let nl = k + 1;
                let nr = list.len() - nl;
                if nl < min_leaf {
                    continue;
                }
                if nr < min_leaf {
                    break;
                }
                let a = self.x.get(list[k], j);
                let b = self.x.get(list[k + 1], j);
                if a == b {
                    continue;
                }
                let (nl, nr) = (nl as f64, nr as f64);
                let gain = parent
                    - nl / n * self.impurity.of(nl, ls, lq)
                    - nr / n * self.impurity.of(nr, sum - ls, sum_sq - lq);
                if gain > MIN_GAIN && best.as_ref().is_none_or(|s| gain > s.gain) {
                    best = Some(Split {
                        feature: j,
                        cut: (a + b) / 2.0,
                        gain,
                    });
                }
            }
        }
        best
    }
}
