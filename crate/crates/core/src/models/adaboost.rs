//! Multiclass AdaBoost (the discrete stagewise variant) over depth-1
//! Gini stumps.
//!
//! Each round fits a stump under the current sample weights, scores its
//! weighted error, and receives the stage weight
//! `alpha = ln((1 - err) / err) + ln(K - 1)`; misclassified rows are
//! upweighted by `exp(alpha)`. Probabilities are the normalized
//! stage-weight vote shares. Boosting stops early on a perfect stump or
//! when no stump beats the multiclass chance bound.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tree::{build_tree, SplitMode, TreeNode, TreeParams, TreeTask};
use super::{argmax, Proba};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::stream;
use crate::N_CATEGORIES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaboostModel {
    /// `(stump, stage weight)` in fitting order.
    pub stumps: Vec<(TreeNode, f64)>,
    /// Training priors, used when no stump survived.
    pub fallback: Proba,
}

impl AdaboostModel {
    pub fn predict_proba(&self, x: &[f64]) -> Proba {
        if self.stumps.is_empty() {
            return self.fallback;
        }
        let mut votes = [0.0f64; N_CATEGORIES];
        let mut total = 0.0;
        for (stump, alpha) in &self.stumps {
            votes[argmax(stump.leaf_value(x))] += alpha;
            total += alpha;
        }
        votes.map(|v| v / total)
    }
}

pub fn fit(
    matrix: &Matrix,
    labels: &[usize],
    hyper: &BTreeMap<String, f64>,
    _seed: u64,
) -> Result<AdaboostModel> {
    let n = matrix.n_rows();
    let rounds = hyper["rounds"] as usize;
    let mut present = [false; N_CATEGORIES];
    for &l in labels {
        present[l] = true;
    }
    let k_classes = present.iter().filter(|&&p| p).count() as f64;

    let params = TreeParams {
        max_depth: 1,
        min_samples_split: 2,
        min_samples_leaf: 1,
        mtry: 0,
        split_mode: SplitMode::Exhaustive,
    };
    let rows: Vec<usize> = (0..n).collect();
    let mut weights = vec![1.0 / n as f64; n];
    let mut stumps: Vec<(TreeNode, f64)> = Vec::new();

    for _ in 0..rounds {
        let task = TreeTask::Classify {
            labels,
            weights: Some(&weights),
        };
        // Weighted exhaustive stumps consume no randomness.
        let stump = build_tree(matrix, &task, &rows, &params, &mut stream::rng(0))?;
        let miss: Vec<bool> = (0..n)
            .map(|i| argmax(stump.leaf_value(matrix.row(i))) != labels[i])
            .collect();
        let err: f64 = (0..n).filter(|&i| miss[i]).map(|i| weights[i]).sum();

        if err < 1e-12 {
            // Perfect stump: give it a large but finite stage weight and stop.
            let alpha = ((1.0 - 1e-12) / 1e-12_f64).ln() + (k_classes - 1.0).ln();
            stumps.push((stump, alpha));
            break;
        }
        let alpha = ((1.0 - err) / err).ln() + (k_classes - 1.0).ln();
        if alpha <= 0.0 {
            // No better than chance for this class count: stop boosting.
            break;
        }
        for i in 0..n {
            if miss[i] {
                weights[i] *= alpha.exp();
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        stumps.push((stump, alpha));
    }

    Ok(AdaboostModel {
        stumps,
        fallback: super::priors(labels),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{fit as fit_model, ModelKind, ModelSpec, TrainedModel};
    use crate::dataset::synthesize_table1;
    use crate::matrix::Matrix;

    #[test]
    fn separable_1d_data_is_learned_by_one_stump() {
        let m = Matrix::from_rows((0..10).map(|i| vec![i as f64]).collect());
        let labels: Vec<usize> = (0..10).map(|i| (i >= 5) as usize).collect();
        let model = fit_model(&ModelSpec::new(ModelKind::Adaboost, 0), &m, &labels).unwrap();
        let TrainedModel::Adaboost(a) = &model.model else {
            panic!("expected adaboost");
        };
        assert_eq!(a.stumps.len(), 1, "perfect stump should stop boosting");
        for i in 0..10 {
            assert_eq!(model.predict(&[i as f64]).unwrap(), labels[i]);
        }
    }

    #[test]
    fn stage_weights_are_positive_and_probabilities_vote_normalized() {
        let data = synthesize_table1(400, 19, true).unwrap();
        let labels = data.label_codes();
        let model = fit_model(
            &ModelSpec::new(ModelKind::Adaboost, 2).with("rounds", 20.0),
            data.matrix(),
            &labels,
        )
        .unwrap();
        let TrainedModel::Adaboost(a) = &model.model else {
            panic!("expected adaboost");
        };
        assert!(!a.stumps.is_empty());
        for (_, alpha) in &a.stumps {
            assert!(*alpha > 0.0);
        }
        let p = model.predict_proba(data.matrix().row(0)).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
