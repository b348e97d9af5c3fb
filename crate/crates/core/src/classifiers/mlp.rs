use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::MlpParams;
use super::{softmax_in_place, Matrix, Standardizer, TrainData};

/// Gradient of the MLP loss, laid out like [`Mlp::params`].
pub type MlpGrad = Vec<f64>;

/// One-hidden-layer perceptron: ReLU hidden units, softmax output,
/// cross-entropy loss with L2 on the weight matrices.
///
/// Parameters are stored flat as `[W1 (hidden × in), b1, W2 (out × hidden), b2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub scaler: Standardizer,
    pub n_in: usize,
    pub hidden: usize,
    pub n_out: usize,
    pub l2: f64,
    pub params: Vec<f64>,
}

struct Layout {
    w1: std::ops::Range<usize>,
    b1: std::ops::Range<usize>,
    w2: std::ops::Range<usize>,
    b2: std::ops::Range<usize>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases, identity input scaling.
    pub fn new_random(n_in: usize, hidden: usize, n_out: usize, l2: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Mlp {
            scaler: Standardizer {
                mean: vec![0.0; n_in],
                scale: vec![1.0; n_in],
            },
            n_in,
            hidden,
            n_out,
            l2,
            params: vec![0.0; hidden * n_in + hidden + n_out * hidden + n_out],
        };
        let l = m.layout();
        let lim1 = (6.0 / (n_in + hidden) as f64).sqrt();
        for v in &mut m.params[l.w1] {
            *v = rng.random_range(-lim1..lim1);
        }
        let lim2 = (6.0 / (hidden + n_out) as f64).sqrt();
        for v in &mut m.params[l.w2] {
            *v = rng.random_range(-lim2..lim2);
        }
        m
    }

    fn layout(&self) -> Layout {
        let w1 = 0..self.hidden * self.n_in;
        let b1 = w1.end..w1.end + self.hidden;
        let w2 = b1.end..b1.end + self.n_out * self.hidden;
        let b2 = w2.end..w2.end + self.n_out;
        Layout { w1, b1, w2, b2 }
    }

    /// Hidden activations and output probabilities for an already-scaled input.
    fn forward(&self, x: &[f64], hidden: &mut [f64], out: &mut [f64]) {
        let l = self.layout();
        let (w1, b1) = (&self.params[l.w1], &self.params[l.b1]);
        let (w2, b2) = (&self.params[l.w2], &self.params[l.b2]);
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &w1[j * self.n_in..(j + 1) * self.n_in];
            let z = b1[j] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            *h = z.max(0.0);
        }
        for (c, o) in out.iter_mut().enumerate() {
            let row = &w2[c * self.hidden..(c + 1) * self.hidden];
            *o = b2[c] + row.iter().zip(hidden.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
        softmax_in_place(out);
    }

    /// Loss and gradient over `rows` of `x` (inputs already scaled).
    pub fn loss_and_grad_rows(&self, x: &Matrix, y: &[usize], rows: &[usize]) -> (f64, MlpGrad) {
        let l = self.layout();
        let mut grad = vec![0.0; self.params.len()];
        let mut hidden = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.n_out];
        let mut dh = vec![0.0; self.hidden];
        let n = rows.len() as f64;
        let mut loss = 0.0;
        let w2 = &self.params[l.w2.clone()];
        for &i in rows {
            let xi = x.row(i);
            self.forward(xi, &mut hidden, &mut out);
            loss -= out[y[i]].max(f64::MIN_POSITIVE).ln();
            out[y[i]] -= 1.0;
            dh.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..self.n_out {
                let g = out[c] / n;
                if g == 0.0 {
                    continue;
                }
                let base = l.w2.start + c * self.hidden;
                for j in 0..self.hidden {
                    grad[base + j] += g * hidden[j];
                    dh[j] += g * w2[c * self.hidden + j];
                }
                grad[l.b2.start + c] += g;
            }
            for j in 0..self.hidden {
                if hidden[j] <= 0.0 {
                    continue;
                }
                let g = dh[j];
                let base = l.w1.start + j * self.n_in;
                for (k, xv) in xi.iter().enumerate() {
                    grad[base + k] += g * xv;
                }
                grad[l.b1.start + j] += g;
            }
        }
        loss /= n;
        let mut reg = 0.0;
        for range in [l.w1, l.w2] {
            for k in range {
                reg += self.params[k] * self.params[k];
                grad[k] += self.l2 * self.params[k];
            }
        }
        loss += 0.5 * self.l2 * reg;
        (loss, grad)
    }

    pub fn loss_and_grad(&self, x: &Matrix, y: &[usize]) -> (f64, MlpGrad) {
        let rows: Vec<usize> = (0..x.rows()).collect();
        self.loss_and_grad_rows(x, y, &rows)
    }

    pub(crate) fn fit(data: &TrainData<'_>, params: &MlpParams, seed: u64) -> Self {
        let scaler = Standardizer::fit(data.x);
        let xs = scaler.transform(data.x);
        let mut model = Mlp::new_random(xs.cols(), params.hidden, data.n_classes, params.l2, seed);
        model.scaler = scaler;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let mut order: Vec<usize> = (0..xs.rows()).collect();
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(params.batch_size) {
                let (_, grad) = model.loss_and_grad_rows(&xs, data.y, batch);
                for (p, g) in model.params.iter_mut().zip(&grad) {
                    *p -= params.learning_rate * g;
                }
            }
        }
        model
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let xs = self.scaler.apply(x);
        let mut hidden = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.n_out];
        self.forward(&xs, &mut hidden, &mut out);
        out
    }
}
