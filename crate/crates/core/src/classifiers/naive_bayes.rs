use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::params::NbParams;
use super::{softmax_in_place, TrainData};

/// Gaussian naive Bayes: per-class feature means and variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Log prior per class; `None` for classes absent from training.
    pub log_prior: Vec<Option<f64>>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub(crate) fn fit(data: &TrainData<'_>, params: NbParams) -> Self {
        let (n, d, c) = (data.x.rows(), data.x.cols(), data.n_classes);
        let mut counts = vec![0usize; c];
        let mut means = vec![vec![0.0; d]; c];
        for i in 0..n {
            let k = data.y[i];
            counts[k] += 1;
            for (m, v) in means[k].iter_mut().zip(data.x.row(i)) {
                *m += v;
            }
        }
        for (m, &cnt) in means.iter_mut().zip(&counts) {
            if cnt > 0 {
                m.iter_mut().for_each(|v| *v /= cnt as f64);
            }
        }
        let mut variances = vec![vec![0.0; d]; c];
        for i in 0..n {
            let k = data.y[i];
            for ((s, v), m) in variances[k].iter_mut().zip(data.x.row(i)).zip(&means[k]) {
                *s += (v - m) * (v - m);
            }
        }
        for (var, &cnt) in variances.iter_mut().zip(&counts) {
            for s in var.iter_mut() {
                let v = if cnt > 0 { *s / cnt as f64 } else { 0.0 };
                *s = v.max(params.var_floor);
            }
        }
        let log_prior = counts
            .iter()
            .map(|&k| (k > 0).then(|| (k as f64 / n as f64).ln()))
            .collect();
        GaussianNb {
            log_prior,
            means,
            variances,
        }
    }

    /// Joint log-likelihood log p(x, class) per class.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> Vec<f64> {
        self.log_prior
            .iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(&lp, (mean, var))| {
                let Some(lp) = lp else {
                    return f64::NEG_INFINITY;
                };
                lp + x
                    .iter()
                    .zip(mean.iter().zip(var))
                    .map(|(v, (m, s))| -0.5 * ((2.0 * PI * s).ln() + (v - m) * (v - m) / s))
                    .sum::<f64>()
            })
            .collect()
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.joint_log_likelihood(x);
        softmax_in_place(&mut z);
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{argmax, Matrix};

    #[test]
    fn separates_two_gaussians() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]]).unwrap();
        let y = [0, 0, 0, 1, 1, 1];
        let m = GaussianNb::fit(&TrainData { x: &x, y: &y, n_classes: 2 }, NbParams { var_floor: 1e-9 });
        assert_eq!(m.means[1], vec![11.0]);
        assert!((m.variances[0][0] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(argmax(&m.scores(&[3.0])), 0);
        assert_eq!(argmax(&m.scores(&[9.0])), 1);
        let s = m.scores(&[6.0]);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_floored() {
        let x = Matrix::from_rows(&[[1.0], [1.0], [3.0], [4.0]]).unwrap();
        let y = [0, 0, 1, 1];
        let m = GaussianNb::fit(&TrainData { x: &x, y: &y, n_classes: 3 }, NbParams { var_floor: 1e-9 });
        assert_eq!(m.variances[0][0], 1e-9);
        let s = m.scores(&[1.0]);
        assert_eq!(s[2], 0.0);
        assert!(s[0] > 0.99);
    }
}
