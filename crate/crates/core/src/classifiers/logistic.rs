use serde::{Deserialize, Serialize};

use super::params::LogisticParams;
use super::{softmax_in_place, Matrix, Standardizer, TrainData};

/// Multinomial logistic regression on standardized features, trained by
/// full-batch gradient descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub scaler: Standardizer,
    /// Row-major `n_classes × n_features`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub iterations: usize,
    pub final_loss: f64,
}

/// Mean cross-entropy plus `l2/2·‖W‖²` and its gradient, for parameters laid
/// out as `[W (row-major, classes × features), b]`.
pub fn softmax_loss_and_grad(
    params: &[f64],
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    l2: f64,
) -> (f64, Vec<f64>) {
    let d = x.cols();
    let (w, b) = params.split_at(n_classes * d);
    let mut grad = vec![0.0; params.len()];
    let n = x.rows() as f64;
    let mut loss = 0.0;
    let mut z = vec![0.0; n_classes];
    for i in 0..x.rows() {
        let row = x.row(i);
        for c in 0..n_classes {
            z[c] = b[c] + dot(&w[c * d..(c + 1) * d], row);
        }
        softmax_in_place(&mut z);
        loss -= z[y[i]].max(f64::MIN_POSITIVE).ln();
        z[y[i]] -= 1.0;
        for c in 0..n_classes {
            let g = z[c] / n;
            for (gw, v) in grad[c * d..(c + 1) * d].iter_mut().zip(row) {
                *gw += g * v;
            }
            grad[n_classes * d + c] += g;
        }
    }
    loss /= n;
    for (gw, wv) in grad[..n_classes * d].iter_mut().zip(w) {
        *gw += l2 * wv;
    }
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    (loss, grad)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LogisticRegression {
    pub(crate) fn fit(data: &TrainData<'_>, params: &LogisticParams) -> Self {
        let scaler = Standardizer::fit(data.x);
        let xs = scaler.transform(data.x);
        let (c, d) = (data.n_classes, xs.cols());
        let mut theta = vec![0.0; c * d + c];
        let mut prev = f64::INFINITY;
        let mut iterations = 0;
        let mut final_loss = f64::NAN;
        for it in 0..params.max_iter {
            let (loss, grad) = softmax_loss_and_grad(&theta, &xs, data.y, c, params.l2);
            iterations = it + 1;
            final_loss = loss;
            if (prev - loss).abs() < params.tol {
                break;
            }
            prev = loss;
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t -= params.learning_rate * g;
            }
        }
        let bias = theta.split_off(c * d);
        LogisticRegression {
            scaler,
            weights: theta,
            bias,
            iterations,
            final_loss,
        }
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let xs = self.scaler.apply(x);
        let d = xs.len();
        let mut z: Vec<f64> = self
            .bias
            .iter()
            .enumerate()
            .map(|(c, b)| b + dot(&self.weights[c * d..(c + 1) * d], &xs))
            .collect();
        softmax_in_place(&mut z);
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::argmax;

    #[test]
    fn zero_params_give_log_c_loss() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let (loss, _) = softmax_loss_and_grad(&[0.0; 9], &x, &[0, 2], 3, 0.0);
        assert!((loss - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fits_linearly_separable_data() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [4.0, 4.0], [4.0, 5.0], [8.0, 0.0], [9.0, 0.0]]).unwrap();
        let y = [0, 0, 1, 1, 2, 2];
        let m = LogisticRegression::fit(
            &TrainData { x: &x, y: &y, n_classes: 3 },
            &LogisticParams { max_iter: 2500, learning_rate: 0.5, tol: 1e-6, l2: 1e-4 },
        );
        for i in 0..6 {
            assert_eq!(argmax(&m.scores(x.row(i))), y[i]);
        }
        assert!(m.iterations <= 2500);
    }
}
