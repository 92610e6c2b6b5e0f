//! Small numeric helpers: moments, Pearson correlation, z-scoring.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Pearson correlation; `None` when either column has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n == 0 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Per-column z-score transform fitted on training data.
///
/// Zero-variance columns transform to 0 so they carry no distance weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(m: &Matrix) -> Self {
        let d = m.n_cols();
        let mut mu = vec![0.0; d];
        let mut sd = vec![0.0; d];
        for j in 0..d {
            let col = m.column(j);
            mu[j] = mean(&col);
            sd[j] = variance(&col).sqrt();
        }
        Standardizer { mean: mu, std: sd }
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..row.len() {
            out[j] = if self.std[j] > 0.0 {
                (row[j] - self.mean[j]) / self.std[j]
            } else {
                0.0
            };
        }
    }

    pub fn transform(&self, m: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(m.n_rows(), m.n_cols());
        let mut buf = vec![0.0; m.n_cols()];
        for i in 0..m.n_rows() {
            self.transform_row(m.row(i), &mut buf);
            for j in 0..m.n_cols() {
                out.set(i, j, buf[j]);
            }
        }
        out
    }
}

/// Squared Euclidean distance.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_perfect_and_degenerate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        let r = pearson(&xs, &ys).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let flat = [5.0, 5.0, 5.0, 5.0];
        assert!(pearson(&xs, &flat).is_none());
    }

    #[test]
    fn standardizer_zeroes_constant_columns() {
        let m = Matrix::from_rows(vec![vec![1.0, 7.0], vec![3.0, 7.0]]);
        let s = Standardizer::fit(&m);
        let t = s.transform(&m);
        assert!((t.get(0, 0) + 1.0).abs() < 1e-12);
        assert_eq!(t.get(0, 1), 0.0);
        assert_eq!(t.get(1, 1), 0.0);
    }
}
