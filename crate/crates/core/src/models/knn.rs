//! k-nearest-neighbors with z-scored features and vote-fraction
//! probabilities.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Proba;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::stats::{dist2, Standardizer};
use crate::N_CATEGORIES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub norm: Standardizer,
    /// Training rows, already normalized.
    pub train: Matrix,
    pub labels: Vec<usize>,
    pub k: usize,
}

impl KnnModel {
    pub fn predict_proba(&self, x: &[f64]) -> Proba {
        let mut xn = vec![0.0; x.len()];
        self.norm.transform_row(x, &mut xn);
        let mut dists: Vec<(f64, usize)> = (0..self.train.n_rows())
            .map(|i| (dist2(&xn, self.train.row(i)), i))
            .collect();
        // Distance ties resolve to the lower training row index.
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = [0.0f64; N_CATEGORIES];
        for &(_, i) in dists.iter().take(self.k) {
            votes[self.labels[i]] += 1.0;
        }
        votes.map(|v| v / self.k as f64)
    }
}

pub fn fit(matrix: &Matrix, labels: &[usize], hyper: &BTreeMap<String, f64>) -> Result<KnnModel> {
    let k = (hyper["k"] as usize).min(matrix.n_rows());
    let norm = Standardizer::fit(matrix);
    let train = norm.transform(matrix);
    Ok(KnnModel {
        norm,
        train,
        labels: labels.to_vec(),
        k,
    })
}
