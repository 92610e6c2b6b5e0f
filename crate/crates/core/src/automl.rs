//! Pipeline orchestration: stratified holdout split, per-fold preprocessing
//! (collinearity pruning, SMOTE+Tomek resampling, z-scoring) fit on training
//! portions only, cross-validated comparison of the model zoo into a sorted
//! leaderboard, random-search tuning, and one-shot finalization against the
//! holdout.
//!
//! Every source of randomness is a named substream of the run seed, keyed by
//! model kind, fold, and candidate indices, so results are identical for any
//! thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_kfold_codes, stratified_split, ColumnKind, Dataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{self, ConfusionMatrix, MetricReport};
use crate::models::{fit, FittedModel, ModelKind, ModelSpec, Proba};
use crate::resample::{smote_tomek, RowOrigin};
use crate::stats::{mean, pearson, variance, Standardizer};
use crate::stream;

/// Neighbor count used by SMOTE inside the pipeline.
pub const SMOTE_K: usize = 5;

/// Metric used to order the leaderboard and score tuning candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortMetric {
    Accuracy,
    Auc,
    Recall,
    Precision,
    F1,
}

impl SortMetric {
    pub fn name(self) -> &'static str {
        match self {
            SortMetric::Accuracy => "accuracy",
            SortMetric::Auc => "auc",
            SortMetric::Recall => "recall",
            SortMetric::Precision => "precision",
            SortMetric::F1 => "f1",
        }
    }
}

impl std::fmt::Display for SortMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Full pipeline configuration; every field has a default so a config file
/// may specify any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub holdout_fraction: f64,
    pub cv_folds: usize,
    pub resample: bool,
    pub normalize: bool,
    pub multicollinearity_threshold: f64,
    pub sort_metric: SortMetric,
    pub models: Vec<ModelKind>,
    pub tune_budget: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            holdout_fraction: 0.30,
            cv_folds: 10,
            resample: true,
            normalize: true,
            multicollinearity_threshold: 0.9,
            sort_metric: SortMetric::Accuracy,
            models: ModelKind::ALL.to_vec(),
            tune_budget: 50,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction <= 0.5) {
            return Err(Error::Config(format!(
                "holdout_fraction must be in (0, 0.5], got {}",
                self.holdout_fraction
            )));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config(format!(
                "cv_folds must be >= 2, got {}",
                self.cv_folds
            )));
        }
        if !(self.multicollinearity_threshold > 0.0 && self.multicollinearity_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "multicollinearity_threshold must be in (0, 1], got {}",
                self.multicollinearity_threshold
            )));
        }
        if self.models.is_empty() {
            return Err(Error::Config("model list is empty".to_string()));
        }
        if self.tune_budget == 0 {
            return Err(Error::Config("tune_budget must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// One pruned feature column and why it was removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub dropped: String,
    /// The earlier column it correlated with; absent for zero-variance drops.
    pub partner: Option<String>,
    /// Pearson r against the partner; absent for zero-variance drops.
    pub r: Option<f64>,
}

/// Remove zero-variance columns, then scan ordered pairs (i < j) and drop
/// the later column of any pair whose |Pearson r| exceeds the threshold.
/// Returns the kept column indices (ascending) and the drop report.
pub fn drop_multicollinear(
    matrix: &Matrix,
    names: &[String],
    threshold: f64,
) -> Result<(Vec<usize>, Vec<DropRecord>)> {
    let d = matrix.n_cols();
    if names.len() != d {
        return Err(Error::Validation(format!(
            "{} feature names for {d} columns",
            names.len()
        )));
    }
    if d < 2 {
        return Err(Error::Validation(format!(
            "multicollinearity scan needs at least 2 columns, got {d}"
        )));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!(
            "multicollinearity threshold must be in (0, 1], got {threshold}"
        )));
    }
    let cols: Vec<Vec<f64>> = (0..d).map(|j| matrix.column(j)).collect();
    let mut dropped_flag = vec![false; d];
    let mut report = Vec::new();
    for j in 0..d {
        if variance(&cols[j]) == 0.0 {
            dropped_flag[j] = true;
            report.push(DropRecord {
                dropped: names[j].clone(),
                partner: None,
                r: None,
            });
        }
    }
    for i in 0..d {
        for j in (i + 1)..d {
            if dropped_flag[j] {
                continue;
            }
            let Some(r) = pearson(&cols[i], &cols[j]) else {
                continue;
            };
            if r.abs() > threshold {
                dropped_flag[j] = true;
                report.push(DropRecord {
                    dropped: names[j].clone(),
                    partner: Some(names[i].clone()),
                    r: Some(r),
                });
            }
        }
    }
    let kept: Vec<usize> = (0..d).filter(|&j| !dropped_flag[j]).collect();
    if kept.is_empty() {
        return Err(Error::Config(
            "every feature column was dropped by the multicollinearity scan".to_string(),
        ));
    }
    Ok((kept, report))
}

/// Frozen preprocessing state: which columns survive pruning and the
/// z-score statistics (absent when normalization is off).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub kept: Vec<usize>,
    pub dropped: Vec<DropRecord>,
    pub norm: Option<Standardizer>,
}

impl Preprocess {
    /// Project a raw feature matrix onto the kept columns and normalize.
    pub fn apply(&self, m: &Matrix) -> Matrix {
        let sel = m.select_cols(&self.kept);
        match &self.norm {
            Some(s) => s.transform(&sel),
            None => sel,
        }
    }
}

/// Per-fold validation scores for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScores {
    pub accuracy: f64,
    pub auc: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl FoldScores {
    fn from_report(r: &MetricReport) -> FoldScores {
        FoldScores {
            accuracy: r.accuracy,
            auc: r.auc_ovr_macro,
            recall: r.weighted_recall,
            precision: r.weighted_precision,
            f1: r.weighted_f1,
        }
    }

    fn get(&self, m: SortMetric) -> f64 {
        match m {
            SortMetric::Accuracy => self.accuracy,
            SortMetric::Auc => self.auc,
            SortMetric::Recall => self.recall,
            SortMetric::Precision => self.precision,
            SortMetric::F1 => self.f1,
        }
    }
}

/// One leaderboard row: fold means of the validation metrics. Precision,
/// recall, and F1 are the support-weighted variants. Wall time is kept in
/// memory for display but never serialized, so leaderboard bytes depend
/// only on config and seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub kind: ModelKind,
    pub accuracy: f64,
    pub auc: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub folds: Vec<FoldScores>,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl LeaderboardEntry {
    pub fn get(&self, m: SortMetric) -> f64 {
        match m {
            SortMetric::Accuracy => self.accuracy,
            SortMetric::Auc => self.auc,
            SortMetric::Recall => self.recall,
            SortMetric::Precision => self.precision,
            SortMetric::F1 => self.f1,
        }
    }
}

/// Outcome of the per-fold leakage audit: every row that contributed to a
/// resampled training matrix (originals and synthetic parents) is traced
/// back to dataset indices and checked against that fold's validation set
/// and the holdout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub folds: usize,
    pub train_rows_audited: usize,
    pub violations: usize,
    /// Validation row indices (into the dataset) per fold.
    pub fold_val_indices: Vec<Vec<usize>>,
    /// Sorted dataset row indices each fold's resampled training matrix
    /// traces back to (originals plus synthetic parents), so the
    /// disjointness claim can be re-checked from the artifact alone.
    pub fold_sources: Vec<Vec<usize>>,
}

/// Everything `compare_models` produces besides artifacts on disk.
#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub leaderboard: Vec<LeaderboardEntry>,
    /// Preprocessing refit on the full training partition, as finalization
    /// will use it.
    pub preprocess: Preprocess,
    pub fold_reports: BTreeMap<ModelKind, Vec<MetricReport>>,
    pub train_indices: Vec<usize>,
    pub holdout_indices: Vec<usize>,
    pub leakage: LeakageAudit,
}

/// Shared training material for one fold: preprocessed (and optionally
/// resampled) training matrix plus the untouched validation portion.
struct FoldData {
    train_x: Matrix,
    train_y: Vec<usize>,
    val_x: Matrix,
    val_y: Vec<usize>,
    /// Dataset row indices that contributed to `train_x`.
    sources: BTreeSet<usize>,
}

fn build_fold(
    data: &Dataset,
    train_abs: &[usize],
    val_abs: &[usize],
    config: &PipelineConfig,
    smote_seed: u64,
) -> Result<FoldData> {
    let labels = data.label_codes();
    let names = data.schema().names();
    let all_kinds = data.schema().column_kinds();

    let train_raw = data.matrix().select_rows(train_abs);
    let train_y_raw: Vec<usize> = train_abs.iter().map(|&i| labels[i]).collect();

    let (kept, _dropped) =
        drop_multicollinear(&train_raw, &names, config.multicollinearity_threshold)?;
    let kept_kinds: Vec<ColumnKind> = kept.iter().map(|&j| all_kinds[j]).collect();
    let train_pruned = train_raw.select_cols(&kept);

    let (train_x_raw, train_y, sources) = if config.resample {
        let rs = smote_tomek(&train_pruned, &train_y_raw, &kept_kinds, SMOTE_K, smote_seed)?;
        let mut sources = BTreeSet::new();
        for origin in &rs.origin {
            match *origin {
                RowOrigin::Original(i) => {
                    sources.insert(train_abs[i]);
                }
                RowOrigin::Synthetic(p, q) => {
                    sources.insert(train_abs[p]);
                    sources.insert(train_abs[q]);
                }
            }
        }
        (rs.matrix, rs.labels, sources)
    } else {
        (
            train_pruned,
            train_y_raw,
            train_abs.iter().copied().collect(),
        )
    };

    let val_pruned = data.matrix().select_rows(val_abs).select_cols(&kept);
    let val_y: Vec<usize> = val_abs.iter().map(|&i| labels[i]).collect();

    let (train_x, val_x) = if config.normalize {
        let norm = Standardizer::fit(&train_x_raw);
        (norm.transform(&train_x_raw), norm.transform(&val_pruned))
    } else {
        (train_x_raw, val_pruned)
    };

    Ok(FoldData {
        train_x,
        train_y,
        val_x,
        val_y,
        sources,
    })
}

/// Holdout split plus fully prepared CV folds, shared by comparison and
/// tuning so both see identical data under identical leakage rules.
struct CvContext {
    train_indices: Vec<usize>,
    holdout_indices: Vec<usize>,
    folds: Vec<FoldData>,
    leakage: LeakageAudit,
}

fn build_cv(config: &PipelineConfig, data: &Dataset) -> Result<CvContext> {
    config.validate()?;
    let labels = data.label_codes();
    let (train_indices, holdout_indices) = stratified_split(
        &labels,
        config.holdout_fraction,
        stream::derive(config.seed, "holdout", &[]),
    )?;
    let train_labels: Vec<usize> = train_indices.iter().map(|&i| labels[i]).collect();
    let fold_sets = stratified_kfold_codes(
        &train_labels,
        config.cv_folds,
        stream::derive(config.seed, "folds", &[]),
    )?;

    let splits: Vec<(Vec<usize>, Vec<usize>)> = fold_sets
        .iter()
        .map(|val_local| {
            let in_val: BTreeSet<usize> = val_local.iter().copied().collect();
            let train_abs: Vec<usize> = (0..train_indices.len())
                .filter(|i| !in_val.contains(i))
                .map(|i| train_indices[i])
                .collect();
            let val_abs: Vec<usize> = val_local.iter().map(|&i| train_indices[i]).collect();
            (train_abs, val_abs)
        })
        .collect();

    let folds: Vec<FoldData> = splits
        .par_iter()
        .enumerate()
        .map(|(f, (train_abs, val_abs))| {
            build_fold(
                data,
                train_abs,
                val_abs,
                config,
                stream::derive(config.seed, "smote", &[f as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let holdout_set: BTreeSet<usize> = holdout_indices.iter().copied().collect();
    let mut audited = 0;
    let mut violations = 0;
    let mut fold_val_indices = Vec::with_capacity(folds.len());
    let mut fold_sources = Vec::with_capacity(folds.len());
    for (fold, (_, val_abs)) in folds.iter().zip(&splits) {
        let val_set: BTreeSet<usize> = val_abs.iter().copied().collect();
        audited += fold.sources.len();
        violations += fold
            .sources
            .iter()
            .filter(|i| val_set.contains(i) || holdout_set.contains(i))
            .count();
        fold_val_indices.push(val_abs.clone());
        fold_sources.push(fold.sources.iter().copied().collect::<Vec<usize>>());
    }
    if violations > 0 {
        return Err(Error::Validation(format!(
            "leakage audit failed: {violations} resampled training rows trace to validation or holdout indices"
        )));
    }

    Ok(CvContext {
        train_indices,
        holdout_indices,
        leakage: LeakageAudit {
            folds: folds.len(),
            train_rows_audited: audited,
            violations,
            fold_val_indices,
            fold_sources,
        },
        folds,
    })
}

/// Fit `spec` on every fold and evaluate on the fold's validation portion.
fn score_over_folds(
    folds: &[FoldData],
    kind: ModelKind,
    hyper: &BTreeMap<String, f64>,
    fit_seed: impl Fn(usize) -> u64 + Sync,
) -> Result<Vec<MetricReport>> {
    folds
        .par_iter()
        .enumerate()
        .map(|(f, fd)| {
            let mut spec = ModelSpec::new(kind, fit_seed(f));
            for (k, v) in hyper {
                spec = spec.with(k, *v);
            }
            let model = fit(&spec, &fd.train_x, &fd.train_y)?;
            let scores = model.predict_proba_batch(&fd.val_x)?;
            metrics::evaluate(&fd.val_y, &scores)
        })
        .collect()
}

fn entry_from_reports(
    kind: ModelKind,
    reports: &[MetricReport],
    wall_time_secs: f64,
) -> LeaderboardEntry {
    let folds: Vec<FoldScores> = reports.iter().map(FoldScores::from_report).collect();
    let col = |pick: fn(&FoldScores) -> f64| mean(&folds.iter().map(pick).collect::<Vec<_>>());
    LeaderboardEntry {
        kind,
        accuracy: col(|s| s.accuracy),
        auc: col(|s| s.auc),
        recall: col(|s| s.recall),
        precision: col(|s| s.precision),
        f1: col(|s| s.f1),
        folds,
        wall_time_secs,
    }
}

/// Sort descending by the configured metric; ties break by F1, then AUC,
/// then kind name ascending. The order is total.
fn sort_leaderboard(entries: &mut [LeaderboardEntry], by: SortMetric) {
    entries.sort_by(|a, b| {
        b.get(by)
            .total_cmp(&a.get(by))
            .then(b.f1.total_cmp(&a.f1))
            .then(b.auc.total_cmp(&a.auc))
            .then(a.kind.name().cmp(b.kind.name()))
    });
}

/// Cross-validate every configured model on identical folds and assemble
/// the leaderboard. The holdout split is reserved before any fitting and
/// never touched here.
pub fn compare_models(config: &PipelineConfig, data: &Dataset) -> Result<CompareOutcome> {
    let cv = build_cv(config, data)?;

    let results: Vec<(ModelKind, Vec<MetricReport>, f64)> = config
        .models
        .iter()
        .map(|&kind| {
            let t0 = Instant::now();
            let reports = score_over_folds(&cv.folds, kind, &BTreeMap::new(), |f| {
                stream::derive(config.seed, "fit", &[kind as u64, f as u64])
            })?;
            Ok((kind, reports, t0.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut leaderboard: Vec<LeaderboardEntry> = results
        .iter()
        .map(|(kind, reports, secs)| entry_from_reports(*kind, reports, *secs))
        .collect();
    sort_leaderboard(&mut leaderboard, config.sort_metric);

    let fold_reports: BTreeMap<ModelKind, Vec<MetricReport>> = results
        .into_iter()
        .map(|(kind, reports, _)| (kind, reports))
        .collect();

    let (preprocess, _, _, _) = preprocess_full_train(config, data, &cv.train_indices)?;

    Ok(CompareOutcome {
        leaderboard,
        preprocess,
        fold_reports,
        train_indices: cv.train_indices,
        holdout_indices: cv.holdout_indices,
        leakage: cv.leakage,
    })
}

/// The random-search value grid for one model kind. Empty for kinds with
/// nothing worth searching; those tune to their defaults.
pub fn tuning_grid(kind: ModelKind) -> Vec<(&'static str, Vec<f64>)> {
    match kind {
        ModelKind::Dtree => vec![
            ("max_depth", vec![0.0, 4.0, 6.0, 8.0, 12.0, 16.0]),
            ("min_samples_split", vec![2.0, 5.0, 10.0, 20.0]),
            ("min_samples_leaf", vec![1.0, 2.0, 5.0, 10.0]),
        ],
        ModelKind::Rforest | ModelKind::Xtrees => vec![
            ("n_trees", vec![50.0, 100.0, 200.0, 300.0]),
            ("max_depth", vec![0.0, 8.0, 12.0, 16.0]),
            ("mtry", vec![0.0, 3.0, 5.0, 8.0]),
            ("min_samples_leaf", vec![1.0, 2.0, 5.0]),
        ],
        ModelKind::Gboost => vec![
            ("rounds", vec![50.0, 100.0, 150.0, 200.0]),
            ("learning_rate", vec![0.03, 0.05, 0.1, 0.2, 0.3]),
            ("max_depth", vec![2.0, 3.0, 4.0, 5.0]),
        ],
        ModelKind::Adaboost => vec![("rounds", vec![25.0, 50.0, 100.0, 200.0])],
        ModelKind::Knn => vec![("k", vec![3.0, 5.0, 7.0, 9.0, 11.0, 15.0, 21.0, 31.0])],
        ModelKind::Logreg => vec![(
            "l2",
            vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
        )],
        ModelKind::Gnb | ModelKind::Dummy => Vec::new(),
    }
}

/// One scored tuning candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneCandidate {
    pub hyper: BTreeMap<String, f64>,
    pub score: f64,
}

/// Best hyperparameters found by random search plus the full trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub kind: ModelKind,
    pub hyper: BTreeMap<String, f64>,
    pub score: f64,
    pub sort_metric: SortMetric,
    pub candidates: Vec<TuneCandidate>,
}

/// Random search over the documented grid: `budget` candidates drawn from
/// a substream keyed by the model kind, each scored by the mean CV value
/// of the configured sort metric on the same folds `compare_models` uses.
/// Ties keep the earlier draw.
pub fn tune_model(
    config: &PipelineConfig,
    data: &Dataset,
    kind: ModelKind,
    budget: usize,
) -> Result<TuneOutcome> {
    if budget == 0 {
        return Err(Error::Config("tuning budget must be >= 1".to_string()));
    }
    let cv = build_cv(config, data)?;
    let grid = tuning_grid(kind);
    let mut rng = stream::rng_for(config.seed, "tune", &[kind as u64]);

    let draws: Vec<BTreeMap<String, f64>> = (0..budget)
        .map(|_| {
            grid.iter()
                .map(|(name, values)| {
                    let v = values[rand::Rng::random_range(&mut rng, 0..values.len())];
                    (name.to_string(), v)
                })
                .collect()
        })
        .collect();

    let mut candidates = Vec::with_capacity(budget);
    for (c, hyper) in draws.iter().enumerate() {
        let reports = score_over_folds(&cv.folds, kind, hyper, |f| {
            stream::derive(config.seed, "tune-fit", &[kind as u64, c as u64, f as u64])
        })?;
        let score = mean(
            &reports
                .iter()
                .map(|r| FoldScores::from_report(r).get(config.sort_metric))
                .collect::<Vec<_>>(),
        );
        candidates.push(TuneCandidate {
            hyper: hyper.clone(),
            score,
        });
    }

    let mut best = 0;
    for (c, cand) in candidates.iter().enumerate() {
        if cand.score > candidates[best].score {
            best = c;
        }
    }
    Ok(TuneOutcome {
        kind,
        hyper: candidates[best].hyper.clone(),
        score: candidates[best].score,
        sort_metric: config.sort_metric,
        candidates,
    })
}

/// Fit preprocessing (and optional resampling) on the full training
/// partition: prune, resample, normalize — returning the frozen state and
/// the ready-to-train matrix.
fn preprocess_full_train(
    config: &PipelineConfig,
    data: &Dataset,
    train_indices: &[usize],
) -> Result<(Preprocess, Matrix, Vec<usize>, BTreeSet<usize>)> {
    let labels = data.label_codes();
    let names = data.schema().names();
    let all_kinds = data.schema().column_kinds();

    let train_raw = data.matrix().select_rows(train_indices);
    let train_y_raw: Vec<usize> = train_indices.iter().map(|&i| labels[i]).collect();
    let (kept, dropped) =
        drop_multicollinear(&train_raw, &names, config.multicollinearity_threshold)?;
    let kept_kinds: Vec<ColumnKind> = kept.iter().map(|&j| all_kinds[j]).collect();
    let train_pruned = train_raw.select_cols(&kept);

    let (train_x_raw, train_y, sources) = if config.resample {
        let rs = smote_tomek(
            &train_pruned,
            &train_y_raw,
            &kept_kinds,
            SMOTE_K,
            stream::derive(config.seed, "smote-final", &[]),
        )?;
        let mut sources = BTreeSet::new();
        for origin in &rs.origin {
            match *origin {
                RowOrigin::Original(i) => {
                    sources.insert(train_indices[i]);
                }
                RowOrigin::Synthetic(p, q) => {
                    sources.insert(train_indices[p]);
                    sources.insert(train_indices[q]);
                }
            }
        }
        (rs.matrix, rs.labels, sources)
    } else {
        (
            train_pruned,
            train_y_raw,
            train_indices.iter().copied().collect(),
        )
    };

    let norm = if config.normalize {
        Some(Standardizer::fit(&train_x_raw))
    } else {
        None
    };
    let train_x = match &norm {
        Some(s) => s.transform(&train_x_raw),
        None => train_x_raw,
    };

    Ok((
        Preprocess {
            kept,
            dropped,
            norm,
        },
        train_x,
        train_y,
        sources,
    ))
}

/// A finalized model: schema fingerprint, frozen preprocessing, and the
/// fitted model, self-contained for later prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalModel {
    pub schema_hash: String,
    pub preprocess: Preprocess,
    pub fitted: FittedModel,
}

impl FinalModel {
    /// Predict probabilities for raw (unpruned, unnormalized) feature rows.
    pub fn predict_matrix(&self, m: &Matrix) -> Result<Vec<Proba>> {
        self.fitted.predict_proba_batch(&self.preprocess.apply(m))
    }
}

/// Finalization result: the model plus its single holdout evaluation.
#[derive(Debug, Clone)]
pub struct FinalizeOutcome {
    pub model: FinalModel,
    pub report: MetricReport,
    pub confusion: ConfusionMatrix,
    pub train_indices: Vec<usize>,
    pub holdout_indices: Vec<usize>,
    pub holdout_labels: Vec<usize>,
    pub holdout_scores: Vec<Proba>,
}

/// Refit preprocessing on the full training partition, fit one model, and
/// evaluate the holdout exactly once.
pub fn finalize(
    config: &PipelineConfig,
    data: &Dataset,
    kind: ModelKind,
    hyper: &BTreeMap<String, f64>,
) -> Result<FinalizeOutcome> {
    config.validate()?;
    let labels = data.label_codes();
    let (train_indices, holdout_indices) = stratified_split(
        &labels,
        config.holdout_fraction,
        stream::derive(config.seed, "holdout", &[]),
    )?;
    let (preprocess, train_x, train_y, _sources) =
        preprocess_full_train(config, data, &train_indices)?;

    let mut spec = ModelSpec::new(kind, stream::derive(config.seed, "final", &[kind as u64]));
    for (k, v) in hyper {
        spec = spec.with(k, *v);
    }
    let fitted = fit(&spec, &train_x, &train_y)?;

    let model = FinalModel {
        schema_hash: data.schema().hash_hex(),
        preprocess,
        fitted,
    };
    let holdout_raw = data.matrix().select_rows(&holdout_indices);
    let holdout_labels: Vec<usize> = holdout_indices.iter().map(|&i| labels[i]).collect();
    let holdout_scores = model.predict_matrix(&holdout_raw)?;
    let preds: Vec<usize> = holdout_scores.iter().map(|s| crate::models::argmax(s)).collect();
    let confusion = metrics::confusion(&holdout_labels, &preds)?;
    let report = metrics::evaluate(&holdout_labels, &holdout_scores)?;

    Ok(FinalizeOutcome {
        model,
        report,
        confusion,
        train_indices,
        holdout_indices,
        holdout_labels,
        holdout_scores,
    })
}
