//! Single decision tree and the two forest variants built on it.
//!
//! The plain tree is fully data-deterministic (all features, exhaustive
//! midpoint splits). Random forests bootstrap the rows and sample
//! `mtry = floor(sqrt(d))` features per node by default; extra-trees skip
//! the bootstrap and draw one random threshold per candidate feature.
//! Each ensemble member derives its randomness from a substream indexed
//! by tree number, so trees can build in parallel without changing the
//! result.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{build_tree, SplitMode, TreeNode, TreeParams, TreeTask};
use super::{ModelKind, Proba};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stream;
use crate::N_CATEGORIES;

pub fn fit_dtree(
    matrix: &Matrix,
    labels: &[usize],
    hyper: &BTreeMap<String, f64>,
) -> Result<TreeNode> {
    let params = TreeParams {
        max_depth: hyper["max_depth"] as usize,
        min_samples_split: hyper["min_samples_split"] as usize,
        min_samples_leaf: hyper["min_samples_leaf"] as usize,
        mtry: 0,
        split_mode: SplitMode::Exhaustive,
    };
    let task = TreeTask::Classify {
        labels,
        weights: None,
    };
    let rows: Vec<usize> = (0..matrix.n_rows()).collect();
    // All features, exhaustive splits: no randomness is consumed.
    build_tree(matrix, &task, &rows, &params, &mut stream::rng(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub kind: ModelKind,
    pub trees: Vec<TreeNode>,
}

impl ForestModel {
    /// Mean of the trees' leaf probability vectors.
    pub fn predict_proba(&self, x: &[f64]) -> Proba {
        let mut acc = [0.0f64; N_CATEGORIES];
        for tree in &self.trees {
            let v = tree.leaf_value(x);
            for k in 0..N_CATEGORIES {
                acc[k] += v[k];
            }
        }
        let n = self.trees.len() as f64;
        acc.map(|v| v / n)
    }
}

pub fn fit_forest(
    kind: ModelKind,
    matrix: &Matrix,
    labels: &[usize],
    hyper: &BTreeMap<String, f64>,
    seed: u64,
) -> Result<ForestModel> {
    let n = matrix.n_rows();
    let d = matrix.n_cols();
    let n_trees = hyper["n_trees"] as usize;
    let bootstrap = hyper["bootstrap"] == 1.0;
    let mtry = match hyper["mtry"] as usize {
        0 => (d as f64).sqrt().floor() as usize,
        m => m,
    };
    let params = TreeParams {
        max_depth: hyper["max_depth"] as usize,
        min_samples_split: hyper["min_samples_split"] as usize,
        min_samples_leaf: hyper["min_samples_leaf"] as usize,
        mtry,
        split_mode: match kind {
            ModelKind::Xtrees => SplitMode::RandomThreshold,
            _ => SplitMode::Exhaustive,
        },
    };
    let task = TreeTask::Classify {
        labels,
        weights: None,
    };
    let trees: Vec<TreeNode> = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            use rand::Rng;
            let mut rng = stream::rng_for(seed, "tree", &[t as u64]);
            let rows: Vec<usize> = if bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            build_tree(matrix, &task, &rows, &params, &mut rng)
        })
        .collect::<Result<_>>()?;
    if trees.is_empty() {
        return Err(Error::Model("forest needs at least one tree".to_string()));
    }
    Ok(ForestModel { kind, trees })
}

#[cfg(test)]
mod tests {
    use super::super::{fit, ModelKind, ModelSpec};
    use crate::dataset::synthesize_table1;

    #[test]
    fn degenerate_forest_equals_plain_tree() {
        let data = synthesize_table1(300, 21, true).unwrap();
        let labels = data.label_codes();
        let d = data.matrix().n_cols() as f64;
        let dtree = fit(&ModelSpec::new(ModelKind::Dtree, 1), data.matrix(), &labels).unwrap();
        let degenerate = fit(
            &ModelSpec::new(ModelKind::Rforest, 999)
                .with("n_trees", 1.0)
                .with("bootstrap", 0.0)
                .with("mtry", d),
            data.matrix(),
            &labels,
        )
        .unwrap();
        let probe = synthesize_table1(120, 22, true).unwrap();
        for i in 0..probe.n_rows() {
            let a = dtree.predict_proba(probe.matrix().row(i)).unwrap();
            let b = degenerate.predict_proba(probe.matrix().row(i)).unwrap();
            assert_eq!(a, b, "row {i}");
        }
    }

    #[test]
    fn forest_outperforms_chance_on_structured_data() {
        let data = synthesize_table1(900, 30, true).unwrap();
        let labels = data.label_codes();
        let model = fit(
            &ModelSpec::new(ModelKind::Rforest, 4).with("n_trees", 30.0),
            data.matrix(),
            &labels,
        )
        .unwrap();
        let preds = model.predict_batch(data.matrix()).unwrap();
        let correct = preds.iter().zip(&labels).filter(|(p, y)| p == y).count();
        // Training accuracy of an unpruned forest should be near-perfect.
        assert!(correct as f64 / 900.0 > 0.9, "train accuracy {correct}/900");
    }

    #[test]
    fn bootstrap_produces_tree_diversity() {
        let data = synthesize_table1(400, 14, true).unwrap();
        let labels = data.label_codes();
        let model = fit(
            &ModelSpec::new(ModelKind::Rforest, 9).with("n_trees", 10.0),
            data.matrix(),
            &labels,
        )
        .unwrap();
        let super::super::TrainedModel::Forest(f) = &model.model else {
            panic!("expected forest");
        };
        assert_eq!(f.trees.len(), 10);
        let distinct = f
            .trees
            .iter()
            .any(|t| t != &f.trees[0]);
        assert!(distinct, "bootstrap + mtry should vary the trees");
    }
}
