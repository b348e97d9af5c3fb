use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logistic::dot;
use super::params::SvmParams;
use super::{Standardizer, TrainData};

/// One-vs-rest linear SVM trained by stochastic subgradient descent on the
/// L2-regularized hinge loss (Pegasos step sizes). The bias is folded in as
/// a constant input. With two classes a single separator is trained and the
/// scores are `(-f(x), f(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub scaler: Standardizer,
    /// One `features + 1` weight vector per separator, bias last.
    pub weights: Vec<Vec<f64>>,
    pub n_classes: usize,
}

fn train_binary(x: &[Vec<f64>], positive: &[bool], params: &SvmParams, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = x[0].len();
    let mut w = vec![0.0; d];
    let mut order: Vec<usize> = (0..x.len()).collect();
    let radius = 1.0 / params.lambda.sqrt();
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (params.lambda * t as f64);
            let y = if positive[i] { 1.0 } else { -1.0 };
            let margin = y * dot(&w, &x[i]);
            let shrink = 1.0 - eta * params.lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wv, xv) in w.iter_mut().zip(&x[i]) {
                    *wv += eta * y * xv;
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    w
}

impl LinearSvm {
    pub(crate) fn fit(data: &TrainData<'_>, params: &SvmParams, seed: u64) -> Self {
        let scaler = Standardizer::fit(data.x);
        let x: Vec<Vec<f64>> = (0..data.x.rows())
            .map(|i| {
                let mut r = scaler.apply(data.x.row(i));
                r.push(1.0);
                r
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = if data.n_classes == 2 {
            let pos: Vec<bool> = data.y.iter().map(|&l| l == 1).collect();
            vec![train_binary(&x, &pos, params, &mut rng)]
        } else {
            (0..data.n_classes)
                .map(|c| {
                    let pos: Vec<bool> = data.y.iter().map(|&l| l == c).collect();
                    train_binary(&x, &pos, params, &mut rng)
                })
                .collect()
        };
        LinearSvm {
            scaler,
            weights,
            n_classes: data.n_classes,
        }
    }

    pub fn decision(&self, x: &[f64]) -> Vec<f64> {
        let mut xs = self.scaler.apply(x);
        xs.push(1.0);
        self.weights.iter().map(|w| dot(w, &xs)).collect()
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let d = self.decision(x);
        if self.n_classes == 2 && d.len() == 1 {
            vec![-d[0], d[0]]
        } else {
            d
        }
    }
}
