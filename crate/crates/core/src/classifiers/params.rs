//! Hyperparameter maps and their per-family typed views.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Float(f) => Some(*f),
            ParamValue::Text(t) => t.parse().ok(),
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(i) => Some(*i),
            ParamValue::Float(f) if f.fract() == 0.0 && f.is_finite() => Some(*f as i64),
            ParamValue::Text(t) => t.parse().ok(),
            _ => None,
        }
    }

    pub fn is_none_marker(&self) -> bool {
        matches!(self, ParamValue::Text(t) if t.eq_ignore_ascii_case("none"))
    }

    /// Parses a command-line value: integer, then float, else text.
    pub fn parse_loose(s: &str) -> ParamValue {
        if let Ok(i) = s.parse::<i64>() {
            ParamValue::Int(i)
        } else if let Ok(f) = s.parse::<f64>() {
            ParamValue::Float(f)
        } else {
            ParamValue::Text(s.to_string())
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Text(t) => f.write_str(t),
        }
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<i32> for ParamValue {
    fn from(v: i32) -> Self {
        ParamValue::Int(v as i64)
    }
}

impl From<usize> for ParamValue {
    fn from(v: usize) -> Self {
        ParamValue::Int(v as i64)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Float(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

pub type Params = BTreeMap<String, ParamValue>;

/// Reads a map against a fixed list of accepted keys.
struct Reader<'a> {
    family: &'static str,
    params: &'a Params,
}

impl<'a> Reader<'a> {
    fn new(family: &'static str, params: &'a Params, allowed: &[&str]) -> Result<Self, ModelError> {
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(ModelError::InvalidHyperparam(format!(
                "{family} does not accept `{k}` (accepted: {})",
                allowed.join(", ")
            )));
        }
        Ok(Reader { family, params })
    }

    fn bad(&self, key: &str, why: &str) -> ModelError {
        ModelError::InvalidHyperparam(format!("{}: `{key}` {why}", self.family))
    }

    fn usize_at_least(&self, key: &str, default: usize, min: usize) -> Result<usize, ModelError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => match v.as_i64() {
                Some(i) if i >= min as i64 => Ok(i as usize),
                _ => Err(self.bad(key, &format!("must be an integer >= {min}, got {v}"))),
            },
        }
    }

    fn opt_usize(&self, key: &str, default: Option<usize>, min: usize) -> Result<Option<usize>, ModelError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) if v.is_none_marker() => Ok(None),
            Some(_) => self.usize_at_least(key, 0, min).map(Some),
        }
    }

    fn f64_where(
        &self,
        key: &str,
        default: f64,
        ok: impl Fn(f64) -> bool,
        rule: &str,
    ) -> Result<f64, ModelError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => match v.as_f64() {
                Some(f) if f.is_finite() && ok(f) => Ok(f),
                _ => Err(self.bad(key, &format!("{rule}, got {v}"))),
            },
        }
    }

    fn text(&self, key: &str, default: &str, choices: &[&str]) -> Result<String, ModelError> {
        match self.params.get(key) {
            None => Ok(default.to_string()),
            Some(v) => {
                let s = v.to_string().to_ascii_lowercase();
                if choices.contains(&s.as_str()) {
                    Ok(s)
                } else {
                    Err(self.bad(key, &format!("must be one of {choices:?}, got {v}")))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnParams {
    pub k: usize,
    /// Minkowski exponent.
    pub p: f64,
}

impl KnnParams {
    pub fn parse(hp: &Params) -> Result<Self, ModelError> {
        let r = Reader::new("knn", hp, &["k", "p", "weights"])?;
        r.text("weights", "uniform", &["uniform"])?;
        Ok(KnnParams {
            k: r.usize_at_least("k", 5, 1)?,
            p: r.f64_where("p", 2.0, |p| p >= 1.0, "must be >= 1")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

const TREE_KEYS: [&str; 5] = ["max_depth", "min_samples_split", "min_samples_leaf", "criterion", "splitter"];

impl TreeParams {
    fn read(r: &Reader<'_>) -> Result<Self, ModelError> {
        r.text("criterion", "gini", &["gini"])?;
        r.text("splitter", "best", &["best"])?;
        Ok(TreeParams {
            max_depth: r.opt_usize("max_depth", None, 1)?,
            min_samples_split: r.usize_at_least("min_samples_split", 2, 2)?,
            min_samples_leaf: r.usize_at_least("min_samples_leaf", 1, 1)?,
            max_features: None,
        })
    }

    pub fn parse(hp: &Params) -> Result<Self, ModelError> {
        Self::read(&Reader::new("decision_tree", hp, &TREE_KEYS)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
    /// `"sqrt"` or `"all"`.
    pub max_features: String,
}

impl ForestParams {
    pub fn parse(hp: &Params) -> Result<Self, ModelError> {
        let mut keys = TREE_KEYS.to_vec();
        keys.extend(["n_estimators", "max_features"]);
        let r = Reader::new("random_forest", hp, &keys)?;
        Ok(ForestParams {
            n_estimators: r.usize_at_least("n_estimators", 30, 1)?,
            tree: TreeParams::read(&r)?,
            max_features: r.text("max_features", "sqrt", &["sqrt", "all"])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NbParams {
    pub var_floor: f64,
}

impl NbParams {
    pub fn parse(hp: &Params) -> Result<Self, ModelError> {
        let r = Reader::new("gaussian_nb", hp, &["var_floor"])?;
        Ok(NbParams {
            var_floor: r.f64_where("var_floor", 1e-9, |v| v > 0.0, "must be > 0")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub max_iter: usize,
    pub learning_rate: f64,
    pub tol: f64,
    pub l2: f64,
}

impl LogisticParams {
    pub fn parse(hp: &Params) -> Result<Self, ModelError> {
        let r = Reader::new(
            "logistic_regression",
            hp,
            &["max_iter", "learning_rate", "tol", "l2", "solver"],
        )?;
        // Solver names are accepted for parity with other toolkits; all of
        // them run full-batch gradient descent.
        r.text("solver", "gd", &["gd", "newton-cg", "lbfgs"])?;
        Ok(LogisticParams {
            max_iter: r.usize_at_least("max_iter", 2500, 1)?,
            learning_rate: r.f64_where("learning_rate", 0.5, |v| v > 0.0, "must be > 0")?,
            tol: r.f64_where("tol", 1e-6, |v| v >= 0.0, "must be >= 0")?,
            l2: r.f64_where("l2", 1e-4, |v| v >= 0.0, "must be >= 0")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub epochs: usize,
    pub lambda: f64,
}

impl SvmParams {
    pub fn parse(hp: &Params) -> Result<Self, ModelError> {
        let r = Reader::new("linear_svm", hp, &["epochs", "lambda", "loss"])?;
        r.text("loss", "hinge", &["hinge"])?;
        Ok(SvmParams {
            epochs: r.usize_at_least("epochs", 30, 1)?,
            lambda: r.f64_where("lambda", 1e-3, |v| v > 0.0, "must be > 0")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl MlpParams {
    pub fn parse(hp: &Params) -> Result<Self, ModelError> {
        let r = Reader::new(
            "mlp",
            hp,
            &["hidden", "epochs", "batch_size", "learning_rate", "l2", "activation"],
        )?;
        r.text("activation", "relu", &["relu"])?;
        Ok(MlpParams {
            hidden: r.usize_at_least("hidden", 100, 1)?,
            epochs: r.usize_at_least("epochs", 60, 1)?,
            batch_size: r.usize_at_least("batch_size", 32, 1)?,
            learning_rate: r.f64_where("learning_rate", 0.05, |v| v > 0.0, "must be > 0")?,
            l2: r.f64_where("l2", 1e-4, |v| v >= 0.0, "must be >= 0")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub min_child_weight: f64,
    pub lambda: f64,
}

impl GbdtParams {
    pub fn parse(hp: &Params) -> Result<Self, ModelError> {
        let r = Reader::new(
            "gbdt",
            hp,
            &["n_rounds", "max_depth", "learning_rate", "subsample", "min_child_weight", "lambda", "booster"],
        )?;
        r.text("booster", "gbtree", &["gbtree"])?;
        Ok(GbdtParams {
            n_rounds: r.usize_at_least("n_rounds", 100, 1)?,
            max_depth: r.usize_at_least("max_depth", 6, 1)?,
            learning_rate: r.f64_where("learning_rate", 0.3, |v| v > 0.0, "must be > 0")?,
            subsample: r.f64_where("subsample", 1.0, |v| v > 0.0 && v <= 1.0, "must lie in (0, 1]")?,
            min_child_weight: r.f64_where("min_child_weight", 1.0, |v| v >= 0.0, "must be >= 0")?,
            lambda: r.f64_where("lambda", 1.0, |v| v >= 0.0, "must be >= 0")?,
        })
    }
}
