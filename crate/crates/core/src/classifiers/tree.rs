//! CART classification trees with Gini impurity.
//!
//! Candidate thresholds are enumerated from per-feature presorted sample
//! lists that are partitioned (order-preserving) as the tree grows, so each
//! level costs O(n·d) after the initial sort.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::TreeParams;
use super::{argmax, Matrix, TrainData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Walks flattened nodes from the root and returns the reached leaf's value.
pub(crate) fn descend<'a>(nodes: &'a [TreeNode], x: &[f64]) -> &'a [f64] {
    let mut i = 0;
    loop {
        match &nodes[i] {
            TreeNode::Leaf { value } => return value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => i = if x[*feature] <= *threshold { *left } else { *right },
        }
    }
}

/// Per-feature lists of sample ids sorted by that feature's value. A sample
/// may appear several times (bootstrap draws).
pub(crate) struct SortedColumns {
    pub cols: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(x: &Matrix, samples: &[usize]) -> Self {
        let cols = (0..x.cols())
            .map(|f| {
                let mut idx: Vec<u32> = samples.iter().map(|&s| s as u32).collect();
                idx.sort_by(|&a, &b| {
                    x.get(a as usize, f)
                        .total_cmp(&x.get(b as usize, f))
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        SortedColumns { cols }
    }

    pub fn len(&self) -> usize {
        self.cols.first().map_or(0, Vec::len)
    }

    /// Any column lists the node's samples; the first one is used as the
    /// canonical member list.
    pub fn members(&self) -> &[u32] {
        &self.cols[0]
    }

    pub fn partition(self, go_left: &[bool]) -> (SortedColumns, SortedColumns) {
        let mut left = Vec::with_capacity(self.cols.len());
        let mut right = Vec::with_capacity(self.cols.len());
        for col in self.cols {
            let (l, r): (Vec<u32>, Vec<u32>) = col.into_iter().partition(|&s| go_left[s as usize]);
            left.push(l);
            right.push(r);
        }
        (SortedColumns { cols: left }, SortedColumns { cols: right })
    }
}

/// Threshold between two consecutive distinct sorted values. Falls back to
/// the lower value when the midpoint rounds onto the upper one.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_classes: usize,
    pub nodes: Vec<TreeNode>,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    params: &'a TreeParams,
    rng: ChaCha8Rng,
    go_left: Vec<bool>,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn class_counts(&self, members: &[u32]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &s in members {
            counts[self.y[s as usize]] += 1;
        }
        counts
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.cols();
        match self.params.max_features {
            Some(m) if m < d => {
                let mut f = sample(&mut self.rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    /// Lowest weighted Gini (n_L·gini_L + n_R·gini_R) over valid thresholds.
    fn best_split(&mut self, cols: &SortedColumns, counts: &[usize]) -> Option<BestSplit> {
        let n = cols.len();
        let min_leaf = self.params.min_samples_leaf;
        let total_sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
        let mut best: Option<BestSplit> = None;
        let mut left = vec![0usize; self.n_classes];
        for f in self.candidate_features() {
            let col = &cols.cols[f];
            left.iter_mut().for_each(|c| *c = 0);
            let mut sq_left = 0.0;
            let mut sq_right = total_sq;
            for i in 0..n - 1 {
                let s = col[i] as usize;
                let c = self.y[s];
                let l = left[c] as f64;
                let r = (counts[c] - left[c]) as f64;
                sq_left += 2.0 * l + 1.0;
                sq_right -= 2.0 * r - 1.0;
                left[c] += 1;

                let n_left = i + 1;
                let n_right = n - n_left;
                if n_left < min_leaf || n_right < min_leaf {
                    continue;
                }
                let v = self.x.get(s, f);
                let next = self.x.get(col[i + 1] as usize, f);
                if v >= next {
                    continue;
                }
                let impurity = (n_left as f64 - sq_left / n_left as f64)
                    + (n_right as f64 - sq_right / n_right as f64);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold: midpoint(v, next),
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, cols: SortedColumns, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.class_counts(cols.members());
        let n = cols.len();
        let leaf = TreeNode::Leaf {
            value: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        };
        self.nodes.push(leaf);

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
        if pure || !depth_ok || n < self.params.min_samples_split || n < 2 * self.params.min_samples_leaf {
            return id;
        }
        let Some(split) = self.best_split(&cols, &counts) else {
            return id;
        };
        for &s in cols.members() {
            self.go_left[s as usize] = self.x.get(s as usize, split.feature) <= split.threshold;
        }
        let (l, r) = cols.partition(&self.go_left);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    pub(crate) fn fit(data: &TrainData<'_>, params: &TreeParams, seed: u64) -> Self {
        let samples: Vec<usize> = (0..data.x.rows()).collect();
        Self::fit_on(data, &samples, params, seed)
    }

    /// Fits on a multiset of row indices (repeats allowed).
    pub(crate) fn fit_on(data: &TrainData<'_>, samples: &[usize], params: &TreeParams, seed: u64) -> Self {
        let mut b = Builder {
            x: data.x,
            y: data.y,
            n_classes: data.n_classes,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
            go_left: vec![false; data.x.rows()],
            nodes: Vec::new(),
        };
        b.grow(SortedColumns::new(data.x, samples), 0);
        DecisionTree {
            n_classes: data.n_classes,
            nodes: b.nodes,
        }
    }

    /// Class fractions of the training samples in the reached leaf.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        descend(&self.nodes, x).to_vec()
    }

    pub fn predict_label(&self, x: &[f64]) -> usize {
        argmax(descend(&self.nodes, x))
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Leaf { value } => Some(value.as_slice()),
            _ => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(rows: &[[f64; 2]], y: &[usize], params: TreeParams) -> DecisionTree {
        let x = Matrix::from_rows(rows).unwrap();
        DecisionTree::fit(&TrainData { x: &x, y, n_classes: 2 }, &params, 0)
    }

    #[test]
    fn xor_needs_depth_two() {
        let rows = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = [0, 1, 1, 0];
        let t = fit(&rows, &y, TreeParams::default());
        for (r, &l) in rows.iter().zip(&y) {
            assert_eq!(t.predict_label(r), l);
        }
        assert!(t.leaves().all(|v| v.contains(&1.0)));
        let stump = fit(&rows, &y, TreeParams { max_depth: Some(1), ..TreeParams::default() });
        assert_eq!(stump.depth(), 1);
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let rows: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 0.0]).collect();
        let y: Vec<usize> = (0..10).map(|i| usize::from(i == 9)).collect();
        let t = fit(&rows, &y, TreeParams { min_samples_leaf: 2, ..TreeParams::default() });
        // the lone positive cannot be isolated
        assert_eq!(t.predict_label(&[9.0, 0.0]), 0);
        let t = fit(&rows, &y, TreeParams::default());
        assert_eq!(t.predict_label(&[9.0, 0.0]), 1);
        assert_eq!(t.nodes.len(), 3);
        if let TreeNode::Split { threshold, .. } = &t.nodes[0] {
            assert_eq!(*threshold, 8.5);
        }
    }

    #[test]
    fn constant_features_make_a_leaf() {
        let rows = [[1.0, 1.0], [1.0, 1.0]];
        let t = fit(&rows, &[0, 1], TreeParams::default());
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.scores(&[1.0, 1.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn midpoint_of_adjacent_floats() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        assert_eq!(midpoint(lo, hi), lo);
        assert_eq!(midpoint(1.0, 2.0), 1.5);
    }
}
