use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::ForestParams;
use super::{DecisionTree, TrainData};

/// Bagged Gini trees with per-split feature subsampling; scores are vote
/// fractions of the member trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub(crate) fn fit(data: &TrainData<'_>, params: &ForestParams, seed: u64) -> Self {
        let n = data.x.rows();
        let d = data.x.cols();
        let mut tree_params = params.tree.clone();
        if params.max_features == "sqrt" {
            tree_params.max_features = Some(((d as f64).sqrt().floor() as usize).max(1));
        }

        // Draw every bootstrap and tree seed up front so that fitting the
        // trees in parallel gives the same forest as a sequential loop.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plans: Vec<(Vec<usize>, u64)> = (0..params.n_estimators)
            .map(|_| {
                let bootstrap = (0..n).map(|_| rng.random_range(0..n)).collect();
                (bootstrap, rng.random())
            })
            .collect();
        let trees = plans
            .par_iter()
            .map(|(bootstrap, tree_seed)| DecisionTree::fit_on(data, bootstrap, &tree_params, *tree_seed))
            .collect();
        RandomForest {
            n_classes: data.n_classes,
            trees,
        }
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for t in &self.trees {
            votes[t.predict_label(x)] += 1.0;
        }
        let n = self.trees.len().max(1) as f64;
        votes.iter_mut().for_each(|v| *v /= n);
        votes
    }
}
