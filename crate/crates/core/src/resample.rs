//! Class-imbalance correction: SMOTE oversampling followed by a single
//! pass of Tomek-link cleaning.
//!
//! SMOTE lifts every minority category to the majority count by
//! interpolating between a seed row and one of its k nearest
//! same-category neighbors; Tomek cleaning then deletes both members of
//! every cross-category mutual-nearest-neighbor pair to sharpen the class
//! boundary. Distances are always measured on z-score–normalized columns
//! (statistics of the data being resampled) because raw encodings mix
//! ages with binary flags.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Severity};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::stats::{dist2, Standardizer};
use crate::stream;
use crate::N_CATEGORIES;

/// Accounting for one resampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleReport {
    pub counts_before: [usize; N_CATEGORIES],
    pub counts_after: [usize; N_CATEGORIES],
    pub synthetic_added: [usize; N_CATEGORIES],
    /// Removed row pairs, indexed into the augmented (post-SMOTE) data,
    /// sorted by (min, max).
    pub tomek_pairs: Vec<(usize, usize)>,
}

/// Where an output row of [`smote_tomek`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOrigin {
    /// Carried over unchanged from this input row index.
    Original(usize),
    /// Interpolated between these two input row indices.
    Synthetic(usize, usize),
}

/// SMOTE result: originals first, then synthetic rows grouped by category.
#[derive(Debug, Clone)]
pub struct SmoteOutput {
    pub matrix: Matrix,
    pub labels: Vec<usize>,
    pub synthetic_added: [usize; N_CATEGORIES],
    /// Parent input-row pair `(seed, neighbor)` for each synthetic row, in
    /// output order.
    pub parents: Vec<(usize, usize)>,
}

/// Combined result of SMOTE plus Tomek cleaning.
#[derive(Debug, Clone)]
pub struct ResampleOutput {
    pub matrix: Matrix,
    pub labels: Vec<usize>,
    /// Provenance of every output row, aligned with `matrix`.
    pub origin: Vec<RowOrigin>,
    pub report: ResampleReport,
}

fn check_shapes(matrix: &Matrix, labels: &[usize], kinds: Option<&[ColumnKind]>) -> Result<()> {
    if matrix.n_rows() != labels.len() {
        return Err(Error::Resample(format!(
            "matrix has {} rows but {} labels",
            matrix.n_rows(),
            labels.len()
        )));
    }
    if let Some(k) = kinds {
        if k.len() != matrix.n_cols() {
            return Err(Error::Resample(format!(
                "matrix has {} columns but {} column kinds",
                matrix.n_cols(),
                k.len()
            )));
        }
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= N_CATEGORIES) {
        return Err(Error::Resample(format!("label {bad} out of range")));
    }
    Ok(())
}

fn category_counts(labels: &[usize]) -> [usize; N_CATEGORIES] {
    let mut counts = [0usize; N_CATEGORIES];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

/// Oversample every minority category up to the majority count.
///
/// Each synthetic row is `p + lambda (q - p)` with `lambda` uniform in the
/// open unit interval, `p` a minority seed row taken cyclically, and `q`
/// drawn among `p`'s k nearest same-category neighbors (k capped at
/// category size − 1). Discrete coordinates of the interpolant are rounded
/// to the nearest valid level code. Original rows come first, unchanged;
/// each synthetic row draws from its own seed substream, so the output is
/// a pure function of `(input, k, seed)`.
pub fn smote(
    matrix: &Matrix,
    labels: &[usize],
    kinds: &[ColumnKind],
    k: usize,
    seed: u64,
) -> Result<SmoteOutput> {
    check_shapes(matrix, labels, Some(kinds))?;
    if k == 0 {
        return Err(Error::Config("smote neighbor count must be >= 1".to_string()));
    }
    let counts = category_counts(labels);
    let majority = counts.iter().max().copied().unwrap_or(0);

    let mut out_matrix = matrix.clone();
    let mut out_labels = labels.to_vec();
    let mut synthetic_added = [0usize; N_CATEGORIES];
    let mut parents = Vec::new();
    if matrix.n_rows() == 0 {
        return Ok(SmoteOutput {
            matrix: out_matrix,
            labels: out_labels,
            synthetic_added,
            parents,
        });
    }

    let norm = Standardizer::fit(matrix);
    let normed = norm.transform(matrix);

    for cat in 0..N_CATEGORIES {
        // Absent categories are not oversampled: balance applies to the
        // categories actually present.
        let need = majority - counts[cat];
        if need == 0 || counts[cat] == 0 {
            continue;
        }
        if counts[cat] == 1 {
            let name = Severity::from_code(cat).unwrap().text();
            return Err(Error::Resample(format!(
                "category '{name}' has a single row; interpolation needs at least 2"
            )));
        }
        let ids: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == cat).collect();
        let k_eff = k.min(counts[cat] - 1);

        // k nearest same-category neighbors of every seed row, by
        // (distance, index); independent per row, so the parallel map is
        // order-stable.
        let neighbors: Vec<Vec<usize>> = ids
            .par_iter()
            .map(|&p| {
                let mut dists: Vec<(f64, usize)> = ids
                    .iter()
                    .filter(|&&q| q != p)
                    .map(|&q| (dist2(normed.row(p), normed.row(q)), q))
                    .collect();
                dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                dists.truncate(k_eff);
                dists.into_iter().map(|(_, q)| q).collect()
            })
            .collect();

        for s in 0..need {
            use rand::Rng;
            let mut rng = stream::rng_for(seed, "smote-row", &[cat as u64, s as u64]);
            let p_pos = s % ids.len();
            let p_idx = ids[p_pos];
            let q_idx = neighbors[p_pos][rng.random_range(0..k_eff)];
            let lambda = loop {
                let l: f64 = rng.random();
                if l > 0.0 {
                    break l;
                }
            };
            let p = matrix.row(p_idx);
            let q = matrix.row(q_idx);
            let row: Vec<f64> = kinds
                .iter()
                .enumerate()
                .map(|(j, kind)| {
                    let v = p[j] + lambda * (q[j] - p[j]);
                    match kind {
                        ColumnKind::Continuous => v,
                        ColumnKind::Discrete { lo, hi } => v.round().clamp(*lo, *hi),
                    }
                })
                .collect();
            out_matrix.push_row(&row);
            out_labels.push(cat);
            parents.push((p_idx, q_idx));
            synthetic_added[cat] += 1;
        }
    }

    Ok(SmoteOutput {
        matrix: out_matrix,
        labels: out_labels,
        synthetic_added,
        parents,
    })
}

/// All Tomek links: pairs `(a, b)` with different categories where each is
/// the other's nearest neighbor (Euclidean on z-scored columns, distance
/// ties resolved to the lower row index). Sorted by (min, max).
pub fn tomek_links(matrix: &Matrix, labels: &[usize]) -> Result<Vec<(usize, usize)>> {
    check_shapes(matrix, labels, None)?;
    let n = matrix.n_rows();
    if n < 2 {
        return Ok(Vec::new());
    }
    let norm = Standardizer::fit(matrix);
    let normed = norm.transform(matrix);
    let nn: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, usize::MAX);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = dist2(normed.row(i), normed.row(j));
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect();
    let mut pairs = Vec::new();
    for a in 0..n {
        let b = nn[a];
        if a < b && nn[b] == a && labels[a] != labels[b] {
            pairs.push((a, b));
        }
    }
    pairs.sort_unstable();
    Ok(pairs)
}

/// SMOTE to balance, then one Tomek pass removing both members of every
/// link found on the augmented data.
pub fn smote_tomek(
    matrix: &Matrix,
    labels: &[usize],
    kinds: &[ColumnKind],
    k: usize,
    seed: u64,
) -> Result<ResampleOutput> {
    let counts_before = category_counts(labels);
    let sm = smote(matrix, labels, kinds, k, seed)?;
    let pairs = tomek_links(&sm.matrix, &sm.labels)?;

    let mut removed = vec![false; sm.labels.len()];
    for &(a, b) in &pairs {
        removed[a] = true;
        removed[b] = true;
    }
    let n_original = labels.len();
    let mut out_matrix = Matrix::zeros(0, matrix.n_cols());
    let mut out_labels = Vec::new();
    let mut origin = Vec::new();
    for i in 0..sm.labels.len() {
        if removed[i] {
            continue;
        }
        out_matrix.push_row(sm.matrix.row(i));
        out_labels.push(sm.labels[i]);
        origin.push(if i < n_original {
            RowOrigin::Original(i)
        } else {
            let (p, q) = sm.parents[i - n_original];
            RowOrigin::Synthetic(p, q)
        });
    }
    let report = ResampleReport {
        counts_before,
        counts_after: category_counts(&out_labels),
        synthetic_added: sm.synthetic_added,
        tomek_pairs: pairs,
    };
    Ok(ResampleOutput {
        matrix: out_matrix,
        labels: out_labels,
        origin,
        report,
    })
}
