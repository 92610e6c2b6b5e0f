//! From-scratch model zoo over the three severity categories.
//!
//! Nine families share one interface: fit on an encoded matrix plus
//! labels, predict a length-3 probability vector per row. Tree models and
//! naive Bayes consume raw encoded features; k-NN and logistic regression
//! z-score internally from training statistics. Every fit is a pure
//! function of `(spec, data)` — ensemble members draw from pre-assigned
//! seed substreams, so parallel tree building cannot reorder results.

mod adaboost;
mod dummy;
mod forest;
mod gboost;
mod gnb;
mod knn;
mod logreg;
pub mod tree;

pub use adaboost::AdaboostModel;
pub use dummy::DummyModel;
pub use forest::ForestModel;
pub use gboost::GboostModel;
pub use gnb::GnbModel;
pub use knn::KnnModel;
pub use logreg::{loss_and_grad, LogregModel};
pub use tree::{build_tree, gini_impurity, SplitMode, TreeNode, TreeParams, TreeTask};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::N_CATEGORIES;

/// A probability vector over the three severity categories.
pub type Proba = [f64; N_CATEGORIES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dtree,
    Rforest,
    Xtrees,
    Gboost,
    Adaboost,
    Knn,
    Gnb,
    Logreg,
    Dummy,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::Dtree,
        ModelKind::Rforest,
        ModelKind::Xtrees,
        ModelKind::Gboost,
        ModelKind::Adaboost,
        ModelKind::Knn,
        ModelKind::Gnb,
        ModelKind::Logreg,
        ModelKind::Dummy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dtree => "dtree",
            ModelKind::Rforest => "rforest",
            ModelKind::Xtrees => "xtrees",
            ModelKind::Gboost => "gboost",
            ModelKind::Adaboost => "adaboost",
            ModelKind::Knn => "knn",
            ModelKind::Gnb => "gnb",
            ModelKind::Logreg => "logreg",
            ModelKind::Dummy => "dummy",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_tree_ensemble(self) -> bool {
        matches!(self, ModelKind::Rforest | ModelKind::Xtrees | ModelKind::Gboost)
    }

    /// Allowed hyperparameters and their defaults. Count-like parameters
    /// are validated as integers; 0 encodes "unlimited" for `max_depth`
    /// and "automatic" for `mtry`.
    pub fn hyperparameters(self) -> &'static [(&'static str, f64)] {
        match self {
            ModelKind::Dtree => &[
                ("max_depth", 0.0),
                ("min_samples_split", 2.0),
                ("min_samples_leaf", 1.0),
            ],
            ModelKind::Rforest => &[
                ("n_trees", 100.0),
                ("max_depth", 0.0),
                ("min_samples_split", 2.0),
                ("min_samples_leaf", 1.0),
                ("mtry", 0.0),
                ("bootstrap", 1.0),
            ],
            ModelKind::Xtrees => &[
                ("n_trees", 100.0),
                ("max_depth", 0.0),
                ("min_samples_split", 2.0),
                ("min_samples_leaf", 1.0),
                ("mtry", 0.0),
                ("bootstrap", 0.0),
            ],
            ModelKind::Gboost => &[
                ("rounds", 100.0),
                ("learning_rate", 0.1),
                ("max_depth", 3.0),
            ],
            ModelKind::Adaboost => &[("rounds", 50.0)],
            ModelKind::Knn => &[("k", 5.0)],
            ModelKind::Logreg => &[("l2", 1e-4), ("max_iter", 5000.0), ("tol", 1e-6)],
            ModelKind::Gnb | ModelKind::Dummy => &[],
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// What to train: a model family, overrides for its hyperparameters, and
/// the seed all of its random choices derive from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub hyper: BTreeMap<String, f64>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, seed: u64) -> ModelSpec {
        ModelSpec {
            kind,
            hyper: BTreeMap::new(),
            seed,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> ModelSpec {
        self.hyper.insert(name.to_string(), value);
        self
    }

    /// Defaults overlaid with the spec's overrides; rejects unknown names
    /// and out-of-range values.
    pub fn resolved(&self) -> Result<BTreeMap<String, f64>> {
        let allowed = self.kind.hyperparameters();
        let mut out: BTreeMap<String, f64> =
            allowed.iter().map(|(n, v)| (n.to_string(), *v)).collect();
        for (name, &value) in &self.hyper {
            if !allowed.iter().any(|(n, _)| n == name) {
                let names: Vec<&str> = allowed.iter().map(|(n, _)| *n).collect();
                return Err(Error::Config(format!(
                    "unknown hyperparameter '{name}' for {}; allowed: {names:?}",
                    self.kind
                )));
            }
            if !value.is_finite() {
                return Err(Error::Config(format!(
                    "hyperparameter '{name}' must be finite"
                )));
            }
            out.insert(name.clone(), value);
        }
        for (name, &value) in &out {
            let integer = matches!(
                name.as_str(),
                "n_trees"
                    | "rounds"
                    | "max_depth"
                    | "min_samples_split"
                    | "min_samples_leaf"
                    | "mtry"
                    | "bootstrap"
                    | "k"
                    | "max_iter"
            );
            if integer && (value.fract() != 0.0 || value < 0.0) {
                return Err(Error::Config(format!(
                    "hyperparameter '{name}' must be a nonnegative integer, got {value}"
                )));
            }
            let positive_min = match name.as_str() {
                "n_trees" | "rounds" | "k" | "max_iter" => 1.0,
                "min_samples_split" => 2.0,
                "min_samples_leaf" => 1.0,
                _ => f64::NEG_INFINITY,
            };
            if value < positive_min {
                return Err(Error::Config(format!(
                    "hyperparameter '{name}' must be >= {positive_min}, got {value}"
                )));
            }
            if (name == "learning_rate" || name == "tol") && value <= 0.0 {
                return Err(Error::Config(format!(
                    "hyperparameter '{name}' must be > 0, got {value}"
                )));
            }
            if name == "l2" && value < 0.0 {
                return Err(Error::Config(format!(
                    "hyperparameter 'l2' must be >= 0, got {value}"
                )));
            }
            if name == "bootstrap" && value != 0.0 && value != 1.0 {
                return Err(Error::Config(format!(
                    "hyperparameter 'bootstrap' must be 0 or 1, got {value}"
                )));
            }
        }
        Ok(out)
    }
}

/// A fitted model of any family, ready for prediction and serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum TrainedModel {
    Tree(tree::TreeNode),
    Forest(ForestModel),
    Gboost(GboostModel),
    Adaboost(AdaboostModel),
    Knn(KnnModel),
    Gnb(GnbModel),
    Logreg(LogregModel),
    Dummy(DummyModel),
}

/// A trained model paired with the spec that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub n_features: usize,
    pub model: TrainedModel,
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    /// Probability vector for one input row.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Proba> {
        if x.len() != self.n_features {
            return Err(Error::Model(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.n_features
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("non-finite value in prediction input".to_string()));
        }
        let p = match &self.model {
            TrainedModel::Tree(t) => {
                let v = t.leaf_value(x);
                [v[0], v[1], v[2]]
            }
            TrainedModel::Forest(m) => m.predict_proba(x),
            TrainedModel::Gboost(m) => m.predict_proba(x),
            TrainedModel::Adaboost(m) => m.predict_proba(x),
            TrainedModel::Knn(m) => m.predict_proba(x),
            TrainedModel::Gnb(m) => m.predict_proba(x),
            TrainedModel::Logreg(m) => m.predict_proba(x),
            TrainedModel::Dummy(m) => m.predict_proba(x),
        };
        debug_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9, "off simplex: {p:?}");
        Ok(p)
    }

    /// Probabilities for every row; parallel over rows with order kept.
    pub fn predict_proba_batch(&self, m: &Matrix) -> Result<Vec<Proba>> {
        (0..m.n_rows())
            .into_par_iter()
            .map(|i| self.predict_proba(m.row(i)))
            .collect()
    }

    /// Predicted category: argmax probability, ties to the lower code.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    pub fn predict_batch(&self, m: &Matrix) -> Result<Vec<usize>> {
        Ok(self.predict_proba_batch(m)?.iter().map(|p| argmax(p)).collect())
    }
}

/// Index of the largest entry, first on ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax of a length-3 margin vector.
pub(crate) fn softmax3(z: &Proba) -> Proba {
    let m = z.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut e = [0.0; N_CATEGORIES];
    let mut sum = 0.0;
    for k in 0..N_CATEGORIES {
        e[k] = (z[k] - m).exp();
        sum += e[k];
    }
    for v in &mut e {
        *v /= sum;
    }
    e
}

/// Training-label priors as a probability vector.
pub(crate) fn priors(labels: &[usize]) -> Proba {
    let mut counts = [0.0f64; N_CATEGORIES];
    for &l in labels {
        counts[l] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    counts.map(|c| c / total)
}

fn check_training_input(matrix: &Matrix, labels: &[usize]) -> Result<()> {
    if matrix.n_rows() == 0 {
        return Err(Error::Model("empty training data".to_string()));
    }
    if matrix.n_rows() != labels.len() {
        return Err(Error::Model(format!(
            "matrix has {} rows but {} labels",
            matrix.n_rows(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= N_CATEGORIES) {
        return Err(Error::Model(format!("label {bad} out of range")));
    }
    if !matrix.all_finite() {
        return Err(Error::Model("non-finite feature value in training data".to_string()));
    }
    let mut seen = [false; N_CATEGORIES];
    for &l in labels {
        seen[l] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::Model(
            "training data holds a single category; need at least two".to_string(),
        ));
    }
    Ok(())
}

/// Train a model of the requested family.
pub fn fit(spec: &ModelSpec, matrix: &Matrix, labels: &[usize]) -> Result<FittedModel> {
    check_training_input(matrix, labels)?;
    let hyper = spec.resolved()?;
    let model = match spec.kind {
        ModelKind::Dtree => TrainedModel::Tree(forest::fit_dtree(matrix, labels, &hyper)?),
        ModelKind::Rforest | ModelKind::Xtrees => {
            TrainedModel::Forest(forest::fit_forest(spec.kind, matrix, labels, &hyper, spec.seed)?)
        }
        ModelKind::Gboost => TrainedModel::Gboost(gboost::fit(matrix, labels, &hyper, spec.seed)?),
        ModelKind::Adaboost => {
            TrainedModel::Adaboost(adaboost::fit(matrix, labels, &hyper, spec.seed)?)
        }
        ModelKind::Knn => TrainedModel::Knn(knn::fit(matrix, labels, &hyper)?),
        ModelKind::Gnb => TrainedModel::Gnb(gnb::fit(matrix, labels)?),
        ModelKind::Logreg => TrainedModel::Logreg(logreg::fit(matrix, labels, &hyper)?),
        ModelKind::Dummy => TrainedModel::Dummy(dummy::fit(labels)),
    };
    Ok(FittedModel {
        spec: spec.clone(),
        n_features: matrix.n_cols(),
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synthesize_table1;

    #[test]
    fn unknown_hyperparameter_is_rejected() {
        let spec = ModelSpec::new(ModelKind::Rforest, 1).with("depth", 3.0);
        let err = spec.resolved().unwrap_err();
        assert!(err.to_string().contains("depth"));
        assert!(err.to_string().contains("max_depth"), "should list allowed names");
    }

    #[test]
    fn defaults_fill_in() {
        let spec = ModelSpec::new(ModelKind::Gboost, 1).with("rounds", 25.0);
        let h = spec.resolved().unwrap();
        assert_eq!(h["rounds"], 25.0);
        assert_eq!(h["learning_rate"], 0.1);
        assert_eq!(h["max_depth"], 3.0);
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(ModelSpec::new(ModelKind::Knn, 0).with("k", 0.0).resolved().is_err());
        assert!(ModelSpec::new(ModelKind::Knn, 0).with("k", 2.5).resolved().is_err());
        assert!(ModelSpec::new(ModelKind::Gboost, 0)
            .with("learning_rate", 0.0)
            .resolved()
            .is_err());
        assert!(ModelSpec::new(ModelKind::Rforest, 0)
            .with("bootstrap", 2.0)
            .resolved()
            .is_err());
    }

    #[test]
    fn single_category_training_is_rejected() {
        let data = synthesize_table1(200, 1, false).unwrap();
        let labels = vec![0usize; 200];
        let err = fit(&ModelSpec::new(ModelKind::Dummy, 0), data.matrix(), &labels).unwrap_err();
        assert!(matches!(err, Error::Model(_)));
    }

    #[test]
    fn prediction_checks_dimensions() {
        let data = synthesize_table1(150, 2, false).unwrap();
        let model = fit(
            &ModelSpec::new(ModelKind::Dummy, 0),
            data.matrix(),
            &data.label_codes(),
        )
        .unwrap();
        assert!(model.predict_proba(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn every_family_emits_simplex_probabilities() {
        let data = synthesize_table1(300, 9, true).unwrap();
        let labels = data.label_codes();
        let probe = synthesize_table1(150, 10, true).unwrap();
        for kind in ModelKind::ALL {
            let spec = match kind {
                // Keep the heavy ensembles small for a unit test.
                ModelKind::Rforest | ModelKind::Xtrees => {
                    ModelSpec::new(kind, 5).with("n_trees", 15.0)
                }
                ModelKind::Gboost => ModelSpec::new(kind, 5).with("rounds", 10.0),
                ModelKind::Adaboost => ModelSpec::new(kind, 5).with("rounds", 10.0),
                ModelKind::Logreg => ModelSpec::new(kind, 5).with("max_iter", 200.0),
                _ => ModelSpec::new(kind, 5),
            };
            let model = fit(&spec, data.matrix(), &labels).unwrap();
            let probas = model.predict_proba_batch(probe.matrix()).unwrap();
            for (i, p) in probas.iter().enumerate() {
                assert!(p.iter().all(|&v| v >= 0.0), "{kind} row {i}: {p:?}");
                assert!(
                    (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
                    "{kind} row {i}: {p:?}"
                );
            }
        }
    }

    #[test]
    fn fits_are_deterministic_per_seed() {
        let data = synthesize_table1(250, 4, true).unwrap();
        let labels = data.label_codes();
        for kind in [ModelKind::Rforest, ModelKind::Xtrees, ModelKind::Gboost, ModelKind::Adaboost]
        {
            let spec = ModelSpec::new(kind, 77)
                .with("n_trees", 8.0)
                .with("max_depth", 4.0);
            let spec = if kind == ModelKind::Gboost || kind == ModelKind::Adaboost {
                let mut s = ModelSpec::new(kind, 77).with("rounds", 8.0);
                if kind == ModelKind::Gboost {
                    s = s.with("max_depth", 3.0);
                }
                s
            } else {
                spec
            };
            let a = fit(&spec, data.matrix(), &labels).unwrap();
            let b = fit(&spec, data.matrix(), &labels).unwrap();
            assert_eq!(a, b, "{kind} refit differs");
        }
    }

    #[test]
    fn models_round_trip_through_json() {
        let data = synthesize_table1(200, 6, true).unwrap();
        let labels = data.label_codes();
        for kind in ModelKind::ALL {
            let spec = match kind {
                ModelKind::Rforest | ModelKind::Xtrees => {
                    ModelSpec::new(kind, 3).with("n_trees", 5.0)
                }
                ModelKind::Gboost | ModelKind::Adaboost => {
                    ModelSpec::new(kind, 3).with("rounds", 5.0)
                }
                ModelKind::Logreg => ModelSpec::new(kind, 3).with("max_iter", 100.0),
                _ => ModelSpec::new(kind, 3),
            };
            let model = fit(&spec, data.matrix(), &labels).unwrap();
            let json = serde_json::to_string(&model).unwrap();
            let back: FittedModel = serde_json::from_str(&json).unwrap();
            assert_eq!(model, back, "{kind} JSON round trip");
            let x = data.matrix().row(0);
            assert_eq!(model.predict_proba(x).unwrap(), back.predict_proba(x).unwrap());
        }
    }
}
