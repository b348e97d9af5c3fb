//! Multi-class gradient boosting with second-order regression trees.
//!
//! Each round fits one tree per class to the softmax cross-entropy gradient
//! and hessian (leaf weight `-G / (H + lambda)`). The round's trees are then
//! added with step `learning_rate`, halved until the training loss does not
//! increase, so the recorded loss history is non-increasing.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::GbdtParams;
use super::tree::{descend, midpoint, SortedColumns};
use super::{softmax_in_place, Matrix, TrainData, TreeNode};

const MIN_HESSIAN: f64 = 1e-16;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtTree {
    pub nodes: Vec<TreeNode>,
}

impl GbdtTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        descend(&self.nodes, x)[0]
    }

    fn scale(&mut self, s: f64) {
        for n in &mut self.nodes {
            if let TreeNode::Leaf { value } = n {
                value[0] *= s;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbdt {
    pub n_classes: usize,
    pub base_score: Vec<f64>,
    /// `rounds[r][k]` is the (already step-scaled) tree of class `k` in round `r`.
    pub rounds: Vec<Vec<GbdtTree>>,
    /// Training loss before the first round and after every accepted round.
    pub loss_history: Vec<f64>,
}

struct RegressionBuilder<'a> {
    x: &'a Matrix,
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbdtParams,
    go_left: Vec<bool>,
    nodes: Vec<TreeNode>,
}

impl RegressionBuilder<'_> {
    fn weight(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.params.lambda)
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn grow(&mut self, cols: SortedColumns, depth: usize) -> usize {
        let id = self.nodes.len();
        let (g, h) = cols
            .members()
            .iter()
            .fold((0.0, 0.0), |(g, h), &s| (g + self.grad[s as usize], h + self.hess[s as usize]));
        self.nodes.push(TreeNode::Leaf {
            value: vec![self.weight(g, h)],
        });
        let n = cols.len();
        if depth >= self.params.max_depth || n < 2 {
            return id;
        }

        let parent = self.score(g, h);
        let mcw = self.params.min_child_weight;
        let mut best: Option<(usize, f64, f64)> = None;
        for (f, col) in cols.cols.iter().enumerate() {
            let (mut gl, mut hl) = (0.0, 0.0);
            for i in 0..n - 1 {
                let s = col[i] as usize;
                gl += self.grad[s];
                hl += self.hess[s];
                let v = self.x.get(s, f);
                let next = self.x.get(col[i + 1] as usize, f);
                if v >= next {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < mcw || hr < mcw {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(gr, hr) - parent;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.2) {
                    best = Some((f, midpoint(v, next), gain));
                }
            }
        }
        let Some((feature, threshold, _)) = best else {
            return id;
        };
        for &s in cols.members() {
            self.go_left[s as usize] = self.x.get(s as usize, feature) <= threshold;
        }
        let (l, r) = cols.partition(&self.go_left);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Mean softmax cross-entropy of raw scores `f` (row-major `n × classes`).
fn mean_loss(f: &[f64], y: &[usize], n_classes: usize) -> f64 {
    let mut z = vec![0.0; n_classes];
    let total: f64 = f
        .chunks_exact(n_classes)
        .zip(y)
        .map(|(row, &label)| {
            z.copy_from_slice(row);
            softmax_in_place(&mut z);
            -z[label].max(f64::MIN_POSITIVE).ln()
        })
        .sum();
    total / y.len() as f64
}

impl Gbdt {
    pub(crate) fn fit(data: &TrainData<'_>, params: &GbdtParams, seed: u64) -> Self {
        let (n, c) = (data.x.rows(), data.n_classes);
        let mut counts = vec![0usize; c];
        for &l in data.y {
            counts[l] += 1;
        }
        // log class priors; absent classes get a finite floor
        let base_score: Vec<f64> = counts
            .iter()
            .map(|&k| ((k as f64).max(0.5) / n as f64).ln())
            .collect();

        let mut f: Vec<f64> = (0..n).flat_map(|_| base_score.iter().copied()).collect();
        let mut loss = mean_loss(&f, data.y, c);
        let mut loss_history = vec![loss];
        let mut rounds = Vec::with_capacity(params.n_rounds);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_sub = ((params.subsample * n as f64).round() as usize).clamp(1, n);

        let mut grad = vec![vec![0.0; n]; c];
        let mut hess = vec![vec![0.0; n]; c];
        let mut p = vec![0.0; c];
        for _ in 0..params.n_rounds {
            for i in 0..n {
                p.copy_from_slice(&f[i * c..(i + 1) * c]);
                softmax_in_place(&mut p);
                for k in 0..c {
                    let target = if data.y[i] == k { 1.0 } else { 0.0 };
                    grad[k][i] = p[k] - target;
                    hess[k][i] = (p[k] * (1.0 - p[k])).max(MIN_HESSIAN);
                }
            }
            let rows: Vec<usize> = if n_sub < n {
                let mut r = sample(&mut rng, n, n_sub).into_vec();
                r.sort_unstable();
                r
            } else {
                (0..n).collect()
            };

            let trees: Vec<GbdtTree> = (0..c)
                .into_par_iter()
                .map(|k| {
                    let mut b = RegressionBuilder {
                        x: data.x,
                        grad: &grad[k],
                        hess: &hess[k],
                        params,
                        go_left: vec![false; n],
                        nodes: Vec::new(),
                    };
                    b.grow(SortedColumns::new(data.x, &rows), 0);
                    GbdtTree { nodes: b.nodes }
                })
                .collect();

            let delta: Vec<f64> = (0..n)
                .flat_map(|i| trees.iter().map(move |t| t.predict(data.x.row(i))))
                .collect();
            let mut step = params.learning_rate;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let candidate: Vec<f64> = f.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
                let cand_loss = mean_loss(&candidate, data.y, c);
                if cand_loss <= loss {
                    accepted = Some((candidate, cand_loss));
                    break;
                }
                step *= 0.5;
            }
            let Some((next_f, next_loss)) = accepted else {
                // no descent direction left at any step size
                break;
            };
            f = next_f;
            loss = next_loss;
            loss_history.push(loss);
            rounds.push(
                trees
                    .into_iter()
                    .map(|mut t| {
                        t.scale(step);
                        t
                    })
                    .collect(),
            );
        }

        Gbdt {
            n_classes: c,
            base_score,
            rounds,
            loss_history,
        }
    }

    pub fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.base_score.clone();
        for round in &self.rounds {
            for (zk, t) in z.iter_mut().zip(round) {
                *zk += t.predict(x);
            }
        }
        z
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.raw_scores(x);
        softmax_in_place(&mut z);
        z
    }
}
