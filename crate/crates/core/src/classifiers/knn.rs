use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::params::KnnParams;
use super::{Matrix, TrainData};

/// Brute-force k-nearest-neighbours with uniform weights and a Minkowski
/// metric. Distance ties go to the lower training index, vote ties to the
/// lower class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub p: f64,
    pub n_classes: usize,
    pub points: Matrix,
    pub labels: Vec<usize>,
}

pub fn minkowski(a: &[f64], b: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    } else if p == 1.0 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    } else {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

impl Knn {
    pub(crate) fn fit(data: &TrainData<'_>, params: KnnParams) -> Self {
        Knn {
            k: params.k,
            p: params.p,
            n_classes: data.n_classes,
            points: data.x.clone(),
            labels: data.y.to_vec(),
        }
    }

    /// Training indices of the k nearest points, nearest first.
    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        let n = self.points.rows();
        let k = self.k.min(n);
        let mut cand: Vec<(f64, usize)> = (0..n)
            .map(|i| (minkowski(self.points.row(i), x, self.p), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
        };
        if k < n {
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
        }
        cand.sort_by(cmp);
        cand.into_iter().map(|(_, i)| i).collect()
    }

    /// Neighbour vote fractions per class.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let nbrs = self.neighbors(x);
        let mut votes = vec![0.0; self.n_classes];
        for &i in &nbrs {
            votes[self.labels[i]] += 1.0;
        }
        let total = nbrs.len().max(1) as f64;
        votes.iter_mut().for_each(|v| *v /= total);
        votes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::argmax;

    fn toy() -> Knn {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [5.0, 5.0], [5.0, 6.0]]).unwrap();
        let y = [0, 0, 1, 1];
        Knn::fit(
            &TrainData { x: &x, y: &y, n_classes: 2 },
            KnnParams { k: 3, p: 2.0 },
        )
    }

    #[test]
    fn toy_query() {
        let m = toy();
        // distances from (0.2, 0.4): 0.447, 0.632, 6.88, 7.6 → A, A, B
        assert_eq!(m.neighbors(&[0.2, 0.4]), vec![0, 1, 2]);
        assert_eq!(argmax(&m.scores(&[0.2, 0.4])), 0);
    }

    #[test]
    fn exact_training_point_with_k1() {
        let mut m = toy();
        m.k = 1;
        for i in 0..4 {
            assert_eq!(argmax(&m.scores(m.points.row(i))), m.labels[i]);
        }
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let x = Matrix::from_rows(&[[1.0], [-1.0], [1.0]]).unwrap();
        let y = [1, 0, 0];
        let m = Knn::fit(&TrainData { x: &x, y: &y, n_classes: 2 }, KnnParams { k: 1, p: 2.0 });
        assert_eq!(m.neighbors(&[0.0]), vec![0]);
    }

    #[test]
    fn minkowski_orders() {
        assert_eq!(minkowski(&[0.0, 0.0], &[3.0, 4.0], 2.0), 5.0);
        assert_eq!(minkowski(&[0.0, 0.0], &[3.0, 4.0], 1.0), 7.0);
        assert!((minkowski(&[0.0, 0.0], &[3.0, 4.0], 3.0) - 91f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }
}
