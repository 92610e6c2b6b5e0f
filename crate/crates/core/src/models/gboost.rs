//! Gradient boosting for the three-category softmax objective.
//!
//! Margins start at the log training priors. Each round fits one
//! squared-error regression tree per category to the negative gradient of
//! the multinomial deviance (the residual `y_k - p_k`), then replaces
//! every leaf's mean with a single Newton step
//! `(K-1)/K * sum(residual) / sum(p_k (1 - p_k))` and adds the shrunken
//! leaf values to the margins. Training log-loss is recorded before the
//! first round and after every round.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tree::{build_tree, SplitMode, TreeNode, TreeParams, TreeTask};
use super::{softmax3, Proba};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::stream;
use crate::N_CATEGORIES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GboostModel {
    /// Initial margins: log of the (floored) training priors.
    pub init: Proba,
    pub learning_rate: f64,
    /// One regression tree per category per round.
    pub trees: Vec<[TreeNode; N_CATEGORIES]>,
    /// Multinomial log-loss on the training data: entry 0 is the
    /// prior-only loss, entry m the loss after round m.
    pub training_loss: Vec<f64>,
}

impl GboostModel {
    pub fn margins(&self, x: &[f64]) -> Proba {
        let mut z = self.init;
        for round in &self.trees {
            for k in 0..N_CATEGORIES {
                z[k] += self.learning_rate * round[k].leaf_value(x)[0];
            }
        }
        z
    }

    pub fn predict_proba(&self, x: &[f64]) -> Proba {
        softmax3(&self.margins(x))
    }
}

fn mean_log_loss(p: &[Proba], labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    -labels
        .iter()
        .enumerate()
        .map(|(i, &y)| p[i][y].max(1e-300).ln())
        .sum::<f64>()
        / n
}

pub fn fit(
    matrix: &Matrix,
    labels: &[usize],
    hyper: &BTreeMap<String, f64>,
    seed: u64,
) -> Result<GboostModel> {
    let n = matrix.n_rows();
    let rounds = hyper["rounds"] as usize;
    let learning_rate = hyper["learning_rate"];
    let params = TreeParams {
        max_depth: hyper["max_depth"] as usize,
        min_samples_split: 2,
        min_samples_leaf: 1,
        mtry: 0,
        split_mode: SplitMode::Exhaustive,
    };
    let rows: Vec<usize> = (0..n).collect();

    let init = super::priors(labels).map(|p| p.max(1e-12).ln());
    let mut margins: Vec<Proba> = vec![init; n];
    let mut trees = Vec::with_capacity(rounds);
    let mut training_loss = Vec::with_capacity(rounds + 1);

    for m in 0..rounds {
        let p: Vec<Proba> = margins.iter().map(softmax3).collect();
        training_loss.push(mean_log_loss(&p, labels));

        let mut round_trees: Vec<TreeNode> = Vec::with_capacity(N_CATEGORIES);
        for k in 0..N_CATEGORIES {
            let residuals: Vec<f64> = (0..n)
                .map(|i| (labels[i] == k) as usize as f64 - p[i][k])
                .collect();
            let task = TreeTask::Regress {
                targets: &residuals,
            };
            let mut rng = stream::rng_for(seed, "boost", &[m as u64, k as u64]);
            let mut tree = build_tree(matrix, &task, &rows, &params, &mut rng)?;

            // Newton-step leaf values.
            let n_leaves = tree.n_leaves();
            let mut num = vec![0.0f64; n_leaves];
            let mut den = vec![0.0f64; n_leaves];
            let leaf_of: Vec<usize> = (0..n).map(|i| leaf_ordinal(&tree, matrix.row(i))).collect();
            for i in 0..n {
                num[leaf_of[i]] += residuals[i];
                den[leaf_of[i]] += p[i][k] * (1.0 - p[i][k]);
            }
            let gamma: Vec<f64> = num
                .iter()
                .zip(&den)
                .map(|(&r, &h)| {
                    if h < 1e-12 {
                        0.0
                    } else {
                        (N_CATEGORIES as f64 - 1.0) / N_CATEGORIES as f64 * r / h
                    }
                })
                .collect();
            set_leaf_values(&mut tree, &gamma, &mut 0);
            for i in 0..n {
                margins[i][k] += learning_rate * gamma[leaf_of[i]];
            }
            round_trees.push(tree);
        }
        let arr: [TreeNode; N_CATEGORIES] = round_trees.try_into().expect("three trees per round");
        trees.push(arr);
    }
    let p: Vec<Proba> = margins.iter().map(softmax3).collect();
    training_loss.push(mean_log_loss(&p, labels));

    Ok(GboostModel {
        init,
        learning_rate,
        trees,
        training_loss,
    })
}

/// Ordinal of the leaf `x` reaches, counting leaves left-to-right.
fn leaf_ordinal(node: &TreeNode, x: &[f64]) -> usize {
    let mut idx = 0;
    let mut node = node;
    loop {
        match node {
            TreeNode::Leaf { .. } => return idx,
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                if x[*feature] <= *threshold {
                    node = left;
                } else {
                    idx += left.n_leaves();
                    node = right;
                }
            }
        }
    }
}

fn set_leaf_values(node: &mut TreeNode, values: &[f64], next: &mut usize) {
    match node {
        TreeNode::Leaf { value, .. } => {
            *value = vec![values[*next]];
            *next += 1;
        }
        TreeNode::Internal { left, right, .. } => {
            set_leaf_values(left, values, next);
            set_leaf_values(right, values, next);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{fit as fit_model, ModelKind, ModelSpec, TrainedModel};
    use crate::dataset::synthesize_table1;

    #[test]
    fn training_loss_is_non_increasing_with_defaults() {
        let data = synthesize_table1(500, 12, true).unwrap();
        let labels = data.label_codes();
        let model = fit_model(&ModelSpec::new(ModelKind::Gboost, 3), data.matrix(), &labels).unwrap();
        let TrainedModel::Gboost(g) = &model.model else {
            panic!("expected gboost");
        };
        assert_eq!(g.training_loss.len(), 101);
        for w in g.training_loss.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "loss increased: {} -> {}",
                w[0],
                w[1]
            );
        }
        // And it should actually learn something.
        assert!(g.training_loss.last().unwrap() < &(g.training_loss[0] - 0.05));
    }

    #[test]
    fn boosting_improves_over_priors_on_holdout_structure() {
        let data = synthesize_table1(600, 8, true).unwrap();
        let labels = data.label_codes();
        let spec = ModelSpec::new(ModelKind::Gboost, 5).with("rounds", 30.0);
        let model = fit_model(&spec, data.matrix(), &labels).unwrap();
        let preds = model.predict_batch(data.matrix()).unwrap();
        let acc = preds.iter().zip(&labels).filter(|(p, y)| p == y).count() as f64 / 600.0;
        let prior_acc = labels.iter().filter(|&&y| y == 0).count() as f64 / 600.0;
        assert!(acc > prior_acc + 0.02, "acc {acc:.3} vs prior {prior_acc:.3}");
    }
}
