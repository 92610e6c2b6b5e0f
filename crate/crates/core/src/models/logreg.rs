//! Multinomial logistic regression: full-batch gradient descent with
//! backtracking line search on z-scored features.
//!
//! The parameter vector packs the 3×d weight matrix row-major followed by
//! the three biases. L2 regularization applies to weights only. Descent
//! stops when the gradient norm drops to the tolerance or the iteration
//! budget runs out.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{softmax3, Proba};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::stats::Standardizer;
use crate::N_CATEGORIES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregModel {
    pub norm: Standardizer,
    /// Packed parameters: weights row-major (category-major), then biases.
    pub params: Vec<f64>,
    pub l2: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LogregModel {
    fn d(&self) -> usize {
        (self.params.len() - N_CATEGORIES) / N_CATEGORIES
    }

    pub fn predict_proba(&self, x: &[f64]) -> Proba {
        let mut xn = vec![0.0; x.len()];
        self.norm.transform_row(x, &mut xn);
        let d = self.d();
        let mut z = [0.0f64; N_CATEGORIES];
        for (k, zk) in z.iter_mut().enumerate() {
            let w = &self.params[k * d..(k + 1) * d];
            *zk = self.params[N_CATEGORIES * d + k]
                + w.iter().zip(&xn).map(|(wi, xi)| wi * xi).sum::<f64>();
        }
        softmax3(&z)
    }
}

/// Regularized mean multinomial log-loss and its analytic gradient at
/// `params`, over an already-normalized matrix. Public so the gradient can
/// be validated against finite differences.
pub fn loss_and_grad(x: &Matrix, labels: &[usize], params: &[f64], l2: f64) -> (f64, Vec<f64>) {
    let (loss, grad) = eval(x, labels, params, l2, true);
    (loss, grad.expect("gradient requested"))
}

fn loss_only(x: &Matrix, labels: &[usize], params: &[f64], l2: f64) -> f64 {
    eval(x, labels, params, l2, false).0
}

fn eval(
    x: &Matrix,
    labels: &[usize],
    params: &[f64],
    l2: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let n = x.n_rows();
    let d = x.n_cols();
    debug_assert_eq!(params.len(), N_CATEGORIES * d + N_CATEGORIES);
    let mut loss = 0.0;
    let mut grad = if want_grad {
        Some(vec![0.0f64; params.len()])
    } else {
        None
    };
    for i in 0..n {
        let xi = x.row(i);
        let mut z = [0.0f64; N_CATEGORIES];
        for (k, zk) in z.iter_mut().enumerate() {
            let w = &params[k * d..(k + 1) * d];
            *zk = params[N_CATEGORIES * d + k]
                + w.iter().zip(xi).map(|(wi, v)| wi * v).sum::<f64>();
        }
        let p = softmax3(&z);
        loss -= p[labels[i]].max(1e-300).ln();
        if let Some(g) = grad.as_mut() {
            for k in 0..N_CATEGORIES {
                let delta = p[k] - (labels[i] == k) as usize as f64;
                for (j, &v) in xi.iter().enumerate() {
                    g[k * d + j] += delta * v;
                }
                g[N_CATEGORIES * d + k] += delta;
            }
        }
    }
    loss /= n as f64;
    // L2 on weights, never on biases.
    let w_norm2: f64 = params[..N_CATEGORIES * d].iter().map(|w| w * w).sum();
    loss += 0.5 * l2 * w_norm2;
    if let Some(g) = grad.as_mut() {
        for v in g.iter_mut() {
            *v /= n as f64;
        }
        for (j, v) in g[..N_CATEGORIES * d].iter_mut().enumerate() {
            *v += l2 * params[j];
        }
    }
    (loss, grad)
}

pub fn fit(
    matrix: &Matrix,
    labels: &[usize],
    hyper: &BTreeMap<String, f64>,
) -> Result<LogregModel> {
    let l2 = hyper["l2"];
    let max_iter = hyper["max_iter"] as usize;
    let tol = hyper["tol"];

    let norm = Standardizer::fit(matrix);
    let xn = norm.transform(matrix);
    let d = xn.n_cols();
    let mut params = vec![0.0f64; N_CATEGORIES * d + N_CATEGORIES];

    let mut step = 1.0f64;
    let mut iterations = 0;
    let mut converged = false;
    let (mut loss, mut grad) = loss_and_grad(&xn, labels, &params, l2);
    while iterations < max_iter {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2.sqrt() <= tol {
            converged = true;
            break;
        }
        // Backtracking line search with a sufficient-decrease condition;
        // the step grows gently after every accepted move.
        let mut accepted = false;
        while step > 1e-18 {
            let candidate: Vec<f64> = params
                .iter()
                .zip(&grad)
                .map(|(p, g)| p - step * g)
                .collect();
            let cand_loss = loss_only(&xn, labels, &candidate, l2);
            if cand_loss <= loss - 1e-4 * step * gnorm2 {
                params = candidate;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        step *= 1.2;
        (loss, grad) = loss_and_grad(&xn, labels, &params, l2);
    }

    Ok(LogregModel {
        norm,
        params,
        l2,
        iterations,
        converged,
    })
}
