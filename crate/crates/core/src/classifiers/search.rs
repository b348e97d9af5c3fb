//! Random hyperparameter search scored by stratified k-fold cross-validation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, fit, Matrix, ModelError, ModelSpec, ParamValue};
use crate::dataset::{stratified_folds, Dataset};

/// Where one hyperparameter is drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamDistribution {
    /// Uniform integer in `low..=high`.
    IntRange { low: i64, high: i64 },
    /// Uniform real in `[low, high)`.
    Uniform { low: f64, high: f64 },
    /// Uniform pick from a fixed list.
    Choice(Vec<ParamValue>),
}

impl ParamDistribution {
    fn check(&self, name: &str) -> Result<(), ModelError> {
        let ok = match self {
            ParamDistribution::IntRange { low, high } => low <= high,
            ParamDistribution::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            ParamDistribution::Choice(v) => !v.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidHyperparam(format!("empty search range for `{name}`")))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> ParamValue {
        match self {
            ParamDistribution::IntRange { low, high } => ParamValue::Int(rng.random_range(*low..=*high)),
            ParamDistribution::Uniform { low, high } if low == high => ParamValue::Float(*low),
            ParamDistribution::Uniform { low, high } => ParamValue::Float(rng.random_range(*low..*high)),
            ParamDistribution::Choice(v) => v[rng.random_range(0..v.len())].clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    Accuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    /// Family, fixed hyperparameters and training seed shared by every trial.
    pub base: ModelSpec,
    pub param_distributions: BTreeMap<String, ParamDistribution>,
    pub n_iter: usize,
    pub cv_folds: usize,
    pub seed: u64,
    #[serde(default)]
    pub scoring: Scoring,
}

impl SearchSpec {
    pub fn new(base: ModelSpec) -> Self {
        SearchSpec {
            base,
            param_distributions: BTreeMap::new(),
            n_iter: 10,
            cv_folds: 5,
            seed: 42,
            scoring: Scoring::Accuracy,
        }
    }

    pub fn param(mut self, name: &str, dist: ParamDistribution) -> Self {
        self.param_distributions.insert(name.to_string(), dist);
        self
    }

    /// Draws the `n_iter` candidate specs. Parameters are drawn in name order
    /// from one stream seeded by `seed`.
    pub fn sample_specs(&self) -> Vec<ModelSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.n_iter)
            .map(|_| {
                let mut spec = self.base.clone();
                for (name, dist) in &self.param_distributions {
                    spec.hyperparams.insert(name.clone(), dist.sample(&mut rng));
                }
                spec
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub spec: ModelSpec,
    pub cv_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_spec: ModelSpec,
    pub best_cv_accuracy: f64,
    pub trials: Vec<Trial>,
}

pub fn random_search_cv(search: &SearchSpec, dataset: &Dataset) -> Result<SearchResult, ModelError> {
    if search.n_iter == 0 {
        return Err(ModelError::InvalidHyperparam("n_iter must be >= 1".into()));
    }
    if search.cv_folds < 2 {
        return Err(ModelError::InvalidHyperparam("cv_folds must be >= 2".into()));
    }
    for (name, dist) in &search.param_distributions {
        dist.check(name)?;
    }
    let specs = search.sample_specs();
    for s in &specs {
        s.validate()?;
    }
    if dataset.is_empty() {
        return Err(ModelError::EmptyDataset);
    }

    let folds = stratified_folds(dataset, search.cv_folds, search.seed)?;
    let x = Matrix::from_dataset(dataset)?;
    let y = dataset.labels();
    let parts: Vec<(Matrix, Vec<usize>, Matrix, Vec<usize>)> = (0..search.cv_folds)
        .map(|f| {
            let (tr, te): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| folds[i] != f);
            let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
            (x.select_rows(&tr), pick(&tr), x.select_rows(&te), pick(&te))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|t| (0..search.cv_folds).map(move |f| (t, f)))
        .collect();
    let accs: Vec<f64> = jobs
        .par_iter()
        .map(|&(t, f)| {
            let (xtr, ytr, xte, yte) = &parts[f];
            let model = fit(&specs[t], xtr, ytr, dataset.n_classes())?;
            let hits = (0..xte.rows())
                .filter(|&i| argmax(&model.scores(xte.row(i))) == yte[i])
                .count();
            Ok(hits as f64 / xte.rows() as f64)
        })
        .collect::<Result<_, ModelError>>()?;

    let trials: Vec<Trial> = specs
        .into_iter()
        .zip(accs.chunks_exact(search.cv_folds))
        .map(|(spec, fa)| Trial {
            spec,
            cv_accuracy: fa.iter().sum::<f64>() / fa.len() as f64,
            fold_accuracies: fa.to_vec(),
        })
        .collect();
    let scores: Vec<f64> = trials.iter().map(|t| t.cv_accuracy).collect();
    let best = argmax(&scores);
    Ok(SearchResult {
        best_spec: trials[best].spec.clone(),
        best_cv_accuracy: trials[best].cv_accuracy,
        trials,
    })
}
