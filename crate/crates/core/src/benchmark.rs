//! The mudra model-comparison table: every in-scope classifier
//! configuration trained on one stratified split and scored on the held-out
//! part, with a per-class report for the winner.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::classifiers::{
    random_search_cv, train, Family, ModelError, ModelSpec, ParamDistribution, ParamValue, SearchSpec, TrainedModel,
};
use crate::dataset::{split, Dataset, SplitSpec};
use crate::metrics::{evaluate, render_report, ClassReport, ConfusionMatrix, Format};

#[derive(Debug, Clone)]
pub enum BenchTarget {
    Fixed(ModelSpec),
    /// Random search on the training split, then a refit of the winner on
    /// the whole training split.
    Search(SearchSpec),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub classifier: String,
    pub parameters: String,
    pub target: BenchTarget,
}

impl BenchConfig {
    fn fixed(classifier: &str, parameters: &str, spec: ModelSpec) -> Self {
        BenchConfig {
            classifier: classifier.to_string(),
            parameters: parameters.to_string(),
            target: BenchTarget::Fixed(spec),
        }
    }
}

/// The GBDT search space used by `bench` unless overridden.
pub fn default_gbdt_search(seed: u64) -> SearchSpec {
    let choice = |v: &[ParamValue]| ParamDistribution::Choice(v.to_vec());
    let mut s = SearchSpec::new(ModelSpec::new(Family::Gbdt).with("booster", "gbtree").with_seed(seed))
        .param("max_depth", ParamDistribution::IntRange { low: 2, high: 6 })
        .param("n_rounds", choice(&[50.into(), 100.into(), 150.into()]))
        .param("learning_rate", choice(&[0.1.into(), 0.2.into(), 0.3.into()]))
        .param("subsample", choice(&[0.8.into(), 1.0.into()]));
    s.n_iter = 10;
    s.cv_folds = 5;
    s.seed = seed;
    s
}

/// Every configuration of the model-comparison table that this crate
/// implements (kernel SVMs are not).
pub fn table1_configs(seed: u64) -> Vec<BenchConfig> {
    let spec = |f: Family| ModelSpec::new(f).with_seed(seed);
    let mut c = Vec::new();
    for k in [3, 5, 9] {
        c.push(BenchConfig::fixed(
            "KNN",
            &format!("neighbors:{k}, weights:uniform, metric:minkowski(p=2)"),
            spec(Family::Knn).with("k", k).with("weights", "uniform").with("p", 2.0),
        ));
    }
    for depth in ["7", "10", "None"] {
        c.push(BenchConfig::fixed(
            "Random Forest",
            &format!("estimators:30, criterion:gini, max_depth:{depth}"),
            spec(Family::RandomForest)
                .with("n_estimators", 30)
                .with("criterion", "gini")
                .with("max_depth", ParamValue::parse_loose(depth)),
        ));
    }
    for (name, hidden) in [("Shallow NN", 100), ("Deep NN", 500)] {
        c.push(BenchConfig::fixed(
            name,
            &format!("hidden:{hidden}, activation:relu"),
            spec(Family::Mlp).with("hidden", hidden).with("activation", "relu"),
        ));
    }
    c.push(BenchConfig::fixed(
        "OneVsRest",
        "inner: MLP hidden:500",
        spec(Family::OneVsRest(Box::new(spec(Family::Mlp).with("hidden", 500)))),
    ));
    c.push(BenchConfig::fixed(
        "SVM",
        "kernel:linear, loss:hinge",
        spec(Family::LinearSvm).with("loss", "hinge"),
    ));
    for solver in ["newton-cg", "lbfgs"] {
        c.push(BenchConfig::fixed(
            "Logistic Regression",
            &format!("iterations:2500, solver:{solver} (gradient descent)"),
            spec(Family::LogisticRegression).with("max_iter", 2500).with("solver", solver),
        ));
    }
    c.push(BenchConfig::fixed("Naive Bayes", "distribution:normal", spec(Family::GaussianNb)));
    c.push(BenchConfig {
        classifier: "GBDT with RandomSearch CV".into(),
        parameters: "booster:gbtree".into(),
        target: BenchTarget::Search(default_gbdt_search(seed)),
    });
    for (leaf, split) in [(1, 2), (2, 2), (1, 3), (2, 3)] {
        c.push(BenchConfig::fixed(
            "Decision Tree",
            &format!("min_samples_leaf:{leaf}, splitter:best, min_samples_split:{split}"),
            spec(Family::DecisionTree)
                .with("min_samples_leaf", leaf)
                .with("min_samples_split", split)
                .with("splitter", "best"),
        ));
    }
    c
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub classifier: String,
    pub parameters: String,
    pub accuracy: f64,
    pub seconds: f64,
    /// Spec actually fitted (the search winner for searched rows).
    pub fitted_spec: String,
    pub cv_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub best: usize,
    pub best_model: TrainedModel,
    pub best_matrix: ConfusionMatrix,
    pub best_report: ClassReport,
    pub train_size: usize,
    pub test_size: usize,
}

impl BenchOutcome {
    /// 1 + number of rows with strictly higher test accuracy.
    pub fn rank(&self, row: usize) -> usize {
        1 + self.rows.iter().filter(|r| r.accuracy > self.rows[row].accuracy).count()
    }

    pub fn row_index(&self, classifier: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.classifier == classifier)
    }
}

pub fn run_benchmark(
    dataset: &Dataset,
    split_spec: &SplitSpec,
    configs: &[BenchConfig],
) -> Result<BenchOutcome, ModelError> {
    if configs.is_empty() {
        return Err(ModelError::InvalidHyperparam("no configurations to benchmark".into()));
    }
    let (train_set, test_set) = split(dataset, split_spec)?;
    let mut rows = Vec::with_capacity(configs.len());
    let mut best: Option<(usize, TrainedModel, ConfusionMatrix, ClassReport)> = None;
    for (i, cfg) in configs.iter().enumerate() {
        let clock = Instant::now();
        let (spec, cv_accuracy) = match &cfg.target {
            BenchTarget::Fixed(s) => (s.clone(), None),
            BenchTarget::Search(s) => {
                let r = random_search_cv(s, &train_set)?;
                (r.best_spec, Some(r.best_cv_accuracy))
            }
        };
        let model = train(&spec, &train_set)?;
        let (matrix, report) = evaluate(&model, &test_set)?;
        let seconds = clock.elapsed().as_secs_f64();
        log::info!("{} ({}) accuracy {:.3} in {seconds:.2}s", cfg.classifier, cfg.parameters, report.accuracy);
        let better = best.as_ref().is_none_or(|b| report.accuracy > b.3.accuracy);
        rows.push(BenchRow {
            classifier: cfg.classifier.clone(),
            parameters: cfg.parameters.clone(),
            accuracy: report.accuracy,
            seconds,
            fitted_spec: spec.to_string(),
            cv_accuracy,
        });
        if better {
            best = Some((i, model, matrix, report));
        }
    }
    let (best, best_model, best_matrix, best_report) = best.expect("at least one configuration");
    Ok(BenchOutcome {
        rows,
        best,
        best_model,
        best_matrix,
        best_report,
        train_size: train_set.len(),
        test_size: test_set.len(),
    })
}

/// Accuracy table, a `best:` line and the winner's per-class report.
pub fn render_benchmark(outcome: &BenchOutcome) -> String {
    let cw = outcome.rows.iter().map(|r| r.classifier.len()).max().unwrap_or(10).max(10);
    let pw = outcome.rows.iter().map(|r| r.parameters.len()).max().unwrap_or(10).max(10);
    let mut out = String::new();
    let _ = writeln!(out, "train {} / test {}", outcome.train_size, outcome.test_size);
    let _ = writeln!(out, "{:<cw$}  {:<pw$}  {:>8}  {:>8}", "classifier", "parameters", "accuracy", "seconds");
    for r in &outcome.rows {
        let _ = writeln!(out, "{:<cw$}  {:<pw$}  {:>8.3}  {:>8.2}", r.classifier, r.parameters, r.accuracy, r.seconds);
    }
    let b = &outcome.rows[outcome.best];
    let _ = writeln!(out, "best: {} ({}) accuracy {:.3} [{}]", b.classifier, b.parameters, b.accuracy, b.fitted_spec);
    for r in outcome.rows.iter().filter(|r| r.cv_accuracy.is_some()) {
        let _ = writeln!(
            out,
            "search: {} picked {} with cv accuracy {:.3}",
            r.classifier,
            r.fitted_spec,
            r.cv_accuracy.unwrap_or_default()
        );
    }
    out.push('\n');
    out.push_str(&render_report(&outcome.best_report, &outcome.best_matrix, Format::Text));
    out
}
