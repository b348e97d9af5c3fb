//! From-scratch classifiers over joint-angle feature vectors.
//!
//! Every family is trained through [`train`] from a [`ModelSpec`] and yields a
//! [`TrainedModel`] that scores a feature vector with one value per class.
//! Probabilistic families (naive Bayes, logistic regression, MLP, GBDT,
//! forests, trees, KNN vote fractions) return a probability simplex; the
//! margin families (linear SVM, one-vs-rest) return decision values. The
//! predicted label is always the first index holding the maximal score.

mod forest;
mod gbdt;
mod knn;
mod logistic;
mod matrix;
mod mlp;
mod naive_bayes;
mod ovr;
mod params;
mod persist;
mod search;
mod standardize;
mod svm;
mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::geometry::FeatureVector;
use crate::skeleton::Kind;

pub use forest::RandomForest;
pub use gbdt::{Gbdt, GbdtTree};
pub use knn::Knn;
pub use logistic::{softmax_loss_and_grad, LogisticRegression};
pub use matrix::Matrix;
pub use mlp::{Mlp, MlpGrad};
pub use naive_bayes::GaussianNb;
pub use ovr::OneVsRest;
pub use params::{ParamValue, Params};
pub use persist::{load_model, load_model_file, save_model, save_model_file, FORMAT_VERSION, MAGIC};
pub use search::{random_search_cv, ParamDistribution, Scoring, SearchResult, SearchSpec, Trial};
pub use standardize::Standardizer;
pub use svm::LinearSvm;
pub use tree::{DecisionTree, TreeNode};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparam(String),
    #[error("training set must contain at least two classes")]
    SingleClassDataset,
    #[error("training set is empty")]
    EmptyDataset,
    #[error("non-finite feature at sample {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("feature length mismatch: model expects {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("model format version {found} is not supported (this build reads up to {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("label spaces differ between model and dataset")]
    LabelSpaceMismatch,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name", content = "inner")]
pub enum Family {
    Knn,
    DecisionTree,
    RandomForest,
    GaussianNb,
    LogisticRegression,
    LinearSvm,
    Mlp,
    Gbdt,
    OneVsRest(Box<ModelSpec>),
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Knn => "knn",
            Family::DecisionTree => "decision_tree",
            Family::RandomForest => "random_forest",
            Family::GaussianNb => "gaussian_nb",
            Family::LogisticRegression => "logistic_regression",
            Family::LinearSvm => "linear_svm",
            Family::Mlp => "mlp",
            Family::Gbdt => "gbdt",
            Family::OneVsRest(_) => "one_vs_rest",
        }
    }

    /// Parses a simple (non-wrapping) family name as used on the command line.
    pub fn from_tag(tag: &str) -> Option<Family> {
        let family = match tag.to_ascii_lowercase().replace('-', "_").as_str() {
            "knn" => Family::Knn,
            "decision_tree" | "tree" | "dt" => Family::DecisionTree,
            "random_forest" | "forest" | "rf" => Family::RandomForest,
            "gaussian_nb" | "naive_bayes" | "nb" => Family::GaussianNb,
            "logistic_regression" | "logistic" | "lr" => Family::LogisticRegression,
            "linear_svm" | "svm" => Family::LinearSvm,
            "mlp" => Family::Mlp,
            "gbdt" | "xgboost" => Family::Gbdt,
            _ => return None,
        };
        Some(family)
    }

    pub fn is_probabilistic(&self) -> bool {
        !matches!(self, Family::LinearSvm | Family::OneVsRest(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    #[serde(default)]
    pub hyperparams: Params,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: Family) -> Self {
        ModelSpec {
            family,
            hyperparams: Params::new(),
            seed: 42,
        }
    }

    pub fn with(mut self, name: &str, value: impl Into<ParamValue>) -> Self {
        self.hyperparams.insert(name.to_string(), value.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks family-specific hyperparameters without training.
    pub fn validate(&self) -> Result<(), ModelError> {
        match &self.family {
            Family::Knn => params::KnnParams::parse(&self.hyperparams).map(drop),
            Family::DecisionTree => params::TreeParams::parse(&self.hyperparams).map(drop),
            Family::RandomForest => params::ForestParams::parse(&self.hyperparams).map(drop),
            Family::GaussianNb => params::NbParams::parse(&self.hyperparams).map(drop),
            Family::LogisticRegression => params::LogisticParams::parse(&self.hyperparams).map(drop),
            Family::LinearSvm => params::SvmParams::parse(&self.hyperparams).map(drop),
            Family::Mlp => params::MlpParams::parse(&self.hyperparams).map(drop),
            Family::Gbdt => params::GbdtParams::parse(&self.hyperparams).map(drop),
            Family::OneVsRest(inner) => {
                if !self.hyperparams.is_empty() {
                    return Err(ModelError::InvalidHyperparam(
                        "one_vs_rest takes no hyperparameters of its own".into(),
                    ));
                }
                if matches!(inner.family, Family::OneVsRest(_)) {
                    return Err(ModelError::InvalidHyperparam("nested one_vs_rest".into()));
                }
                inner.validate()
            }
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family.tag())?;
        if let Family::OneVsRest(inner) = &self.family {
            write!(f, "[{inner}]")?;
        }
        if !self.hyperparams.is_empty() {
            let parts: Vec<String> = self
                .hyperparams
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            write!(f, "({})", parts.join(", "))?;
        }
        Ok(())
    }
}

/// Fitted parameters, one variant per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Fitted {
    Knn(Knn),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    GaussianNb(GaussianNb),
    LogisticRegression(LogisticRegression),
    LinearSvm(LinearSvm),
    Mlp(Mlp),
    Gbdt(Gbdt),
    OneVsRest(OneVsRest),
}

impl Fitted {
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Fitted::Knn(m) => m.scores(x),
            Fitted::DecisionTree(m) => m.scores(x),
            Fitted::RandomForest(m) => m.scores(x),
            Fitted::GaussianNb(m) => m.scores(x),
            Fitted::LogisticRegression(m) => m.scores(x),
            Fitted::LinearSvm(m) => m.scores(x),
            Fitted::Mlp(m) => m.scores(x),
            Fitted::Gbdt(m) => m.scores(x),
            Fitted::OneVsRest(m) => m.scores(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub kind: Kind,
    pub class_names: Vec<String>,
    pub feature_length: usize,
    pub fitted: Fitted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub scores: Vec<f64>,
}

impl TrainedModel {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn predict_values(&self, x: &[f64]) -> Result<Prediction, ModelError> {
        if x.len() != self.feature_length {
            return Err(ModelError::LengthMismatch {
                expected: self.feature_length,
                found: x.len(),
            });
        }
        let scores = self.fitted.scores(x);
        Ok(Prediction {
            label: argmax(&scores),
            scores,
        })
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<Prediction, ModelError> {
        self.predict_values(&features.values)
    }

    pub fn label_name(&self, label: usize) -> &str {
        &self.class_names[label]
    }
}

/// Index of the first maximal score; NaN never wins.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &s) in scores.iter().enumerate() {
        if s > best_val {
            best = i;
            best_val = s;
        }
    }
    best
}

/// Numerically stable softmax in place.
pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        let n = z.len() as f64;
        z.iter_mut().for_each(|v| *v = 1.0 / n);
        return;
    }
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Training inputs shared by every family.
pub(crate) struct TrainData<'a> {
    pub x: &'a Matrix,
    pub y: &'a [usize],
    pub n_classes: usize,
}

pub fn train(spec: &ModelSpec, train_set: &Dataset) -> Result<TrainedModel, ModelError> {
    spec.validate()?;
    if train_set.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let x = Matrix::from_dataset(train_set)?;
    let y = train_set.labels();
    let fitted = fit(spec, &x, &y, train_set.n_classes())?;
    Ok(TrainedModel {
        spec: spec.clone(),
        kind: train_set.kind,
        class_names: train_set.class_names.clone(),
        feature_length: x.cols(),
        fitted,
    })
}

/// Fits `spec` on a raw matrix. Labels index `0..n_classes`.
pub(crate) fn fit(
    spec: &ModelSpec,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
) -> Result<Fitted, ModelError> {
    let mut present = vec![false; n_classes];
    for &l in y {
        present[l] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(ModelError::SingleClassDataset);
    }
    let data = TrainData { x, y, n_classes };
    let hp = &spec.hyperparams;
    let fitted = match &spec.family {
        Family::Knn => Fitted::Knn(Knn::fit(&data, params::KnnParams::parse(hp)?)),
        Family::DecisionTree => Fitted::DecisionTree(DecisionTree::fit(
            &data,
            &params::TreeParams::parse(hp)?,
            spec.seed,
        )),
        Family::RandomForest => Fitted::RandomForest(RandomForest::fit(
            &data,
            &params::ForestParams::parse(hp)?,
            spec.seed,
        )),
        Family::GaussianNb => Fitted::GaussianNb(GaussianNb::fit(&data, params::NbParams::parse(hp)?)),
        Family::LogisticRegression => Fitted::LogisticRegression(LogisticRegression::fit(
            &data,
            &params::LogisticParams::parse(hp)?,
        )),
        Family::LinearSvm => Fitted::LinearSvm(LinearSvm::fit(
            &data,
            &params::SvmParams::parse(hp)?,
            spec.seed,
        )),
        Family::Mlp => Fitted::Mlp(Mlp::fit(&data, &params::MlpParams::parse(hp)?, spec.seed)),
        Family::Gbdt => Fitted::Gbdt(Gbdt::fit(&data, &params::GbdtParams::parse(hp)?, spec.seed)),
        Family::OneVsRest(inner) => Fitted::OneVsRest(OneVsRest::fit(&data, inner)?),
    };
    Ok(fitted)
}
