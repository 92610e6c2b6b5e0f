//! Gaussian naive Bayes on raw encoded features.

use serde::{Deserialize, Serialize};

use super::{softmax3, Proba};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::N_CATEGORIES;

/// Variance floor guarding constant features.
const VAR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    /// Training priors; zero for an absent category.
    pub prior: Proba,
    /// Per-category feature means (unused entries zero for absent ones).
    pub mean: Vec<Vec<f64>>,
    /// Per-category feature variances, floored.
    pub var: Vec<Vec<f64>>,
}

impl GnbModel {
    pub fn predict_proba(&self, x: &[f64]) -> Proba {
        let mut log_post = [f64::NEG_INFINITY; N_CATEGORIES];
        for k in 0..N_CATEGORIES {
            if self.prior[k] == 0.0 {
                continue;
            }
            let mut s = self.prior[k].ln();
            for (j, &v) in x.iter().enumerate() {
                let var = self.var[k][j];
                let diff = v - self.mean[k][j];
                s += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - diff * diff / (2.0 * var);
            }
            log_post[k] = s;
        }
        // softmax of log-posteriors = normalized posteriors; -inf entries
        // contribute exactly zero.
        softmax3(&log_post)
    }
}

pub fn fit(matrix: &Matrix, labels: &[usize]) -> Result<GnbModel> {
    let d = matrix.n_cols();
    let prior = super::priors(labels);
    let mut mean = vec![vec![0.0; d]; N_CATEGORIES];
    let mut var = vec![vec![VAR_FLOOR; d]; N_CATEGORIES];
    for k in 0..N_CATEGORIES {
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == k).collect();
        if rows.is_empty() {
            continue;
        }
        let n = rows.len() as f64;
        for j in 0..d {
            let m: f64 = rows.iter().map(|&i| matrix.get(i, j)).sum::<f64>() / n;
            let v: f64 = rows
                .iter()
                .map(|&i| {
                    let diff = matrix.get(i, j) - m;
                    diff * diff
                })
                .sum::<f64>()
                / n;
            mean[k][j] = m;
            var[k][j] = v.max(VAR_FLOOR);
        }
    }
    Ok(GnbModel { prior, mean, var })
}

#[cfg(test)]
mod tests {
    use super::super::{fit as fit_model, ModelKind, ModelSpec};
    use crate::matrix::Matrix;

    #[test]
    fn symmetric_two_gaussian_toy_gives_even_odds_at_zero() {
        // Means ±1, equal spread, equal priors.
        let m = Matrix::from_rows(vec![
            vec![-1.5],
            vec![-1.0],
            vec![-0.5],
            vec![0.5],
            vec![1.0],
            vec![1.5],
        ]);
        let labels = vec![0, 0, 0, 1, 1, 1];
        let model = fit_model(&ModelSpec::new(ModelKind::Gnb, 0), &m, &labels).unwrap();
        let p = model.predict_proba(&[0.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12, "{p:?}");
        assert!((p[1] - 0.5).abs() < 1e-12, "{p:?}");
        assert_eq!(p[2], 0.0);
        // Away from the midpoint the nearer category wins.
        assert_eq!(model.predict(&[-1.2]).unwrap(), 0);
        assert_eq!(model.predict(&[1.2]).unwrap(), 1);
    }

    #[test]
    fn constant_feature_survives_via_variance_floor() {
        let m = Matrix::from_rows(vec![
            vec![5.0, 0.0],
            vec![5.0, 0.2],
            vec![5.0, 10.0],
            vec![5.0, 10.2],
        ]);
        let labels = vec![0, 0, 1, 1];
        let model = fit_model(&ModelSpec::new(ModelKind::Gnb, 0), &m, &labels).unwrap();
        let p = model.predict_proba(&[5.0, 0.1]).unwrap();
        assert!(p[0] > 0.99, "{p:?}");
        assert!(p.iter().all(|v| v.is_finite()));
    }
}
