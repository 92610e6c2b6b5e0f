//! Shapley-value attributions for trained models.
//!
//! Three explainers share one contract — `base + sum(phi) = output` per
//! category — and differ in how they price a coalition of "known"
//! features:
//!
//! * [`tree_shap`]: exact attributions for tree-based models under the
//!   cover-weighted tree-conditional game, in polynomial time.
//! * [`exact_shap`]: brute-force enumeration of all coalitions, usable as
//!   an oracle for small feature counts with either value function.
//! * [`permutation_shap`]: Monte Carlo sampling over feature orderings
//!   against a background sample, for models without tree structure.
//!
//! Tree models are explained in the space they aggregate in: probability
//! for single trees and forests, additive margin for gradient boosting.

mod treeshap;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automl::FinalModel;
use crate::dataset::Dataset;
use crate::models::{argmax, FittedModel, Proba, TrainedModel};
use crate::{stream, Error, Matrix, Result, N_CATEGORIES};

/// Largest feature count [`exact_shap`] will enumerate (2^n coalitions).
pub const MAX_EXACT_FEATURES: usize = 20;

/// The space attributions are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    /// Attributions sum to a probability in [0, 1].
    Probability,
    /// Attributions sum to a pre-softmax additive margin.
    Margin,
}

/// How [`exact_shap`] prices features left out of a coalition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueFunctionMode {
    /// Descend the trees, mixing both branches by cover share at splits on
    /// absent features. Matches [`tree_shap`]; tree models only.
    TreeConditional,
    /// Overwrite absent features with background rows and average the
    /// model output. Works for every model kind.
    BackgroundMarginal,
}

/// Attribution of one instance: per-feature, per-category contributions
/// that reconcile the model output with its baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceExplanation {
    /// feature x category contributions.
    pub phi: Vec<Proba>,
    /// Monte Carlo standard errors per contribution; zeros for the exact
    /// explainers.
    pub se: Vec<Proba>,
    /// Model output under the empty coalition.
    pub base: Proba,
    /// Model output with every feature present.
    pub output: Proba,
    pub output_kind: OutputKind,
}

fn check_input(model: &FittedModel, x: &[f64]) -> Result<()> {
    if x.len() != model.n_features {
        return Err(Error::Explain(format!(
            "instance has {} features, model expects {}",
            x.len(),
            model.n_features
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Explain("non-finite value in instance".to_string()));
    }
    Ok(())
}

fn non_tree_error(model: &FittedModel, what: &str) -> Error {
    Error::Explain(format!(
        "{what} requires a tree-based model (dtree, rforest, xtrees, gboost), got {}",
        model.kind().name()
    ))
}

/// Exact attributions for a tree-based model under the tree-conditional
/// game. Single trees and forests are explained in probability space;
/// gradient boosting in margin space (learning-rate-scaled sums over its
/// regression trees, offset by the initial margin).
pub fn tree_shap(model: &FittedModel, x: &[f64]) -> Result<InstanceExplanation> {
    check_input(model, x)?;
    let d = model.n_features;
    let mut phi = vec![[0.0; N_CATEGORIES]; d];
    let mut base = [0.0; N_CATEGORIES];
    let mut output = [0.0; N_CATEGORIES];
    let output_kind;
    match &model.model {
        TrainedModel::Tree(t) => {
            let p = treeshap::tree_phi(t, x, d, N_CATEGORIES);
            for f in 0..d {
                phi[f].copy_from_slice(&p[f]);
            }
            base.copy_from_slice(&treeshap::tree_expectation(t));
            output.copy_from_slice(&treeshap::full_value(t, x));
            output_kind = OutputKind::Probability;
        }
        TrainedModel::Forest(forest) => {
            let n = forest.trees.len() as f64;
            for t in &forest.trees {
                let p = treeshap::tree_phi(t, x, d, N_CATEGORIES);
                let e = treeshap::tree_expectation(t);
                let v = treeshap::full_value(t, x);
                for f in 0..d {
                    for k in 0..N_CATEGORIES {
                        phi[f][k] += p[f][k] / n;
                    }
                }
                for k in 0..N_CATEGORIES {
                    base[k] += e[k] / n;
                    output[k] += v[k] / n;
                }
            }
            output_kind = OutputKind::Probability;
        }
        TrainedModel::Gboost(g) => {
            base = g.init;
            for round in &g.trees {
                for k in 0..N_CATEGORIES {
                    let p = treeshap::tree_phi(&round[k], x, d, 1);
                    for f in 0..d {
                        phi[f][k] += g.learning_rate * p[f][0];
                    }
                    base[k] += g.learning_rate * treeshap::tree_expectation(&round[k])[0];
                }
            }
            output = g.margins(x);
            output_kind = OutputKind::Margin;
        }
        _ => return Err(non_tree_error(model, "tree attribution")),
    }
    Ok(InstanceExplanation {
        phi,
        se: vec![[0.0; N_CATEGORIES]; d],
        base,
        output,
        output_kind,
    })
}

/// Exact binomial coefficient for the small arguments the Shapley kernel
/// needs (n < 2^7 keeps the product well inside u128).
fn binom(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c as f64
}

/// Brute-force Shapley values for one output category: enumerates every
/// coalition, so the feature count is capped at [`MAX_EXACT_FEATURES`].
///
/// `background` is required (non-empty, matching width) for
/// [`ValueFunctionMode::BackgroundMarginal`] and ignored otherwise.
pub fn exact_shap(
    model: &FittedModel,
    x: &[f64],
    mode: ValueFunctionMode,
    background: Option<&Matrix>,
    category: usize,
) -> Result<Vec<f64>> {
    check_input(model, x)?;
    if category >= N_CATEGORIES {
        return Err(Error::Explain(format!(
            "category {category} out of range 0..{N_CATEGORIES}"
        )));
    }
    let d = model.n_features;
    if d > MAX_EXACT_FEATURES {
        return Err(Error::Explain(format!(
            "exact enumeration over {d} features exceeds the {MAX_EXACT_FEATURES}-feature cap"
        )));
    }
    let n_masks = 1usize << d;
    let mut values = vec![0.0; n_masks];
    match mode {
        ValueFunctionMode::TreeConditional => {
            for (mask, slot) in values.iter_mut().enumerate() {
                let mask = mask as u32;
                *slot = match &model.model {
                    TrainedModel::Tree(t) => treeshap::conditional_value(t, x, mask)[category],
                    TrainedModel::Forest(forest) => {
                        let n = forest.trees.len() as f64;
                        forest
                            .trees
                            .iter()
                            .map(|t| treeshap::conditional_value(t, x, mask)[category])
                            .sum::<f64>()
                            / n
                    }
                    TrainedModel::Gboost(g) => {
                        let mut v = g.init[category];
                        for round in &g.trees {
                            v += g.learning_rate
                                * treeshap::conditional_value(&round[category], x, mask)[0];
                        }
                        v
                    }
                    _ => return Err(non_tree_error(model, "the tree-conditional value function")),
                };
            }
        }
        ValueFunctionMode::BackgroundMarginal => {
            let bg = background.ok_or_else(|| {
                Error::Explain(
                    "the marginal value function requires a background matrix".to_string(),
                )
            })?;
            if bg.n_rows() == 0 {
                return Err(Error::Explain("background matrix is empty".to_string()));
            }
            if bg.n_cols() != d {
                return Err(Error::Explain(format!(
                    "background has {} columns, model expects {d}",
                    bg.n_cols()
                )));
            }
            let mut z = vec![0.0; d];
            for (mask, slot) in values.iter_mut().enumerate() {
                let mut total = 0.0;
                for r in 0..bg.n_rows() {
                    z.copy_from_slice(bg.row(r));
                    for (j, zj) in z.iter_mut().enumerate() {
                        if mask & (1 << j) != 0 {
                            *zj = x[j];
                        }
                    }
                    total += model.predict_proba(&z)?[category];
                }
                *slot = total / bg.n_rows() as f64;
            }
        }
    }
    // Shapley kernel: a coalition of size s (excluding the feature under
    // test) carries weight s!(d-s-1)!/d! = 1/(d * C(d-1, s)).
    let weights: Vec<f64> = (0..d).map(|s| 1.0 / (d as f64 * binom(d - 1, s))).collect();
    let mut phi = vec![0.0; d];
    for mask in 0..n_masks {
        let s = mask.count_ones() as usize;
        for (i, p) in phi.iter_mut().enumerate() {
            if mask & (1 << i) == 0 {
                *p += weights[s] * (values[mask | (1 << i)] - values[mask]);
            }
        }
    }
    Ok(phi)
}

/// Monte Carlo Shapley values: averages marginal contributions over
/// `n_permutations` random feature orderings, each walked from every
/// background row toward the instance. Works for any model kind and
/// explains probabilities. Each permutation's contributions telescope to
/// `f(x) - mean f(background)`, so local accuracy holds for any sample
/// size; standard errors shrink as 1/sqrt(n_permutations).
pub fn permutation_shap(
    model: &FittedModel,
    x: &[f64],
    background: &Matrix,
    n_permutations: usize,
    seed: u64,
) -> Result<InstanceExplanation> {
    check_input(model, x)?;
    if n_permutations == 0 {
        return Err(Error::Explain(
            "permutation sampling needs at least one permutation".to_string(),
        ));
    }
    if background.n_rows() == 0 {
        return Err(Error::Explain("background matrix is empty".to_string()));
    }
    let d = model.n_features;
    if background.n_cols() != d {
        return Err(Error::Explain(format!(
            "background has {} columns, model expects {d}",
            background.n_cols()
        )));
    }
    let n_bg = background.n_rows();
    let output = model.predict_proba(x)?;
    let mut base = [0.0; N_CATEGORIES];
    for r in 0..n_bg {
        let p = model.predict_proba(background.row(r))?;
        for k in 0..N_CATEGORIES {
            base[k] += p[k] / n_bg as f64;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d).collect();
    // Welford accumulation: exact zero spread for constant contribution
    // sequences, where sum-of-squares cancellation would leave noise.
    let mut mean = vec![[0.0; N_CATEGORIES]; d];
    let mut m2 = vec![[0.0; N_CATEGORIES]; d];
    let mut z = vec![0.0; d];
    for p in 0..n_permutations {
        order.shuffle(&mut rng);
        let mut contrib = vec![[0.0; N_CATEGORIES]; d];
        for r in 0..n_bg {
            z.copy_from_slice(background.row(r));
            let mut prev = model.predict_proba(&z)?;
            for &f in &order {
                z[f] = x[f];
                let cur = model.predict_proba(&z)?;
                for k in 0..N_CATEGORIES {
                    contrib[f][k] += cur[k] - prev[k];
                }
                prev = cur;
            }
        }
        let count = (p + 1) as f64;
        for f in 0..d {
            for k in 0..N_CATEGORIES {
                let c = contrib[f][k] / n_bg as f64;
                let delta = c - mean[f][k];
                mean[f][k] += delta / count;
                m2[f][k] += delta * (c - mean[f][k]);
            }
        }
    }
    let n = n_permutations as f64;
    let phi = mean;
    let mut se = vec![[0.0; N_CATEGORIES]; d];
    if n_permutations > 1 {
        for f in 0..d {
            for k in 0..N_CATEGORIES {
                se[f][k] = (m2[f][k].max(0.0) / (n - 1.0) / n).sqrt();
            }
        }
    }
    Ok(InstanceExplanation {
        phi,
        se,
        base,
        output,
        output_kind: OutputKind::Probability,
    })
}

/// Knobs for [`explain_model`]. Defaults: 500 permutations against a
/// 100-row background for non-tree models; tree models ignore both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplainOptions {
    pub n_permutations: usize,
    pub background_size: usize,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions {
            n_permutations: 500,
            background_size: 100,
        }
    }
}

/// Attributions for a batch of instances, in the model's kept-feature
/// space after preprocessing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapMatrix {
    pub model_kind: crate::models::ModelKind,
    pub output_kind: OutputKind,
    /// Names of the kept features, in model column order.
    pub feature_names: Vec<String>,
    /// Dataset row ids of the explained instances.
    pub instance_ids: Vec<usize>,
    pub base: Proba,
    /// instance x feature x category contributions.
    pub values: Vec<Vec<Proba>>,
    /// Standard errors matching `values`; zeros for exact explainers.
    pub se: Vec<Vec<Proba>>,
    /// Model output per instance.
    pub outputs: Vec<Proba>,
    /// Raw (pre-normalization) kept-feature values per instance, for
    /// value-colored displays.
    pub feature_values: Vec<Vec<f64>>,
}

/// Explains instances of `data` with a finalized model: tree-based models
/// via [`tree_shap`], everything else via [`permutation_shap`] against a
/// background sampled from the training rows. `instance_ids` and
/// `train_indices` are dataset row ids; the per-instance permutation
/// streams are keyed by row id, so attributions do not depend on which
/// other instances are explained alongside.
pub fn explain_model(
    model: &FinalModel,
    data: &Dataset,
    train_indices: &[usize],
    instance_ids: &[usize],
    seed: u64,
    opts: &ExplainOptions,
) -> Result<ShapMatrix> {
    if data.schema().hash_hex() != model.schema_hash {
        return Err(Error::Schema(
            "dataset schema does not match the schema the model was finalized on".to_string(),
        ));
    }
    if instance_ids.is_empty() {
        return Err(Error::Explain("no instances to explain".to_string()));
    }
    let n = data.n_rows();
    if let Some(&bad) = instance_ids.iter().find(|&&i| i >= n) {
        return Err(Error::Explain(format!(
            "instance index {bad} out of range for {n} rows"
        )));
    }
    if opts.n_permutations == 0 || opts.background_size == 0 {
        return Err(Error::Explain(
            "n_permutations and background_size must be at least 1".to_string(),
        ));
    }
    let instance_rows = data.matrix().select_rows(instance_ids);
    let feature_values_m = instance_rows.select_cols(&model.preprocess.kept);
    let xm = model.preprocess.apply(&instance_rows);
    let tree_based = matches!(
        model.fitted.model,
        TrainedModel::Tree(_) | TrainedModel::Forest(_) | TrainedModel::Gboost(_)
    );
    let background = if tree_based {
        None
    } else {
        if train_indices.is_empty() {
            return Err(Error::Explain(
                "permutation attribution needs training rows to sample a background from"
                    .to_string(),
            ));
        }
        if let Some(&bad) = train_indices.iter().find(|&&i| i >= n) {
            return Err(Error::Explain(format!(
                "training index {bad} out of range for {n} rows"
            )));
        }
        let take = opts.background_size.min(train_indices.len());
        let mut rng = stream::rng_for(seed, "background", &[]);
        let mut picks: Vec<usize> = index::sample(&mut rng, train_indices.len(), take)
            .into_iter()
            .map(|i| train_indices[i])
            .collect();
        picks.sort_unstable();
        Some(model.preprocess.apply(&data.matrix().select_rows(&picks)))
    };
    let explanations: Vec<InstanceExplanation> = instance_ids
        .par_iter()
        .enumerate()
        .map(|(row, &id)| {
            let x = xm.row(row);
            match &background {
                None => tree_shap(&model.fitted, x),
                Some(bg) => permutation_shap(
                    &model.fitted,
                    x,
                    bg,
                    opts.n_permutations,
                    stream::derive(seed, "perm", &[id as u64]),
                ),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let first = &explanations[0];
    Ok(ShapMatrix {
        model_kind: model.fitted.kind(),
        output_kind: first.output_kind,
        feature_names: {
            let names = data.schema().names();
            model.preprocess.kept.iter().map(|&i| names[i].clone()).collect()
        },
        instance_ids: instance_ids.to_vec(),
        base: first.base,
        values: explanations.iter().map(|e| e.phi.clone()).collect(),
        se: explanations.iter().map(|e| e.se.clone()).collect(),
        outputs: explanations.iter().map(|e| e.output).collect(),
        feature_values: (0..feature_values_m.n_rows())
            .map(|r| feature_values_m.row(r).to_vec())
            .collect(),
    })
}

/// One dot of a beeswarm display: a feature's raw value and attribution
/// at one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeeswarmPoint {
    /// Index into the summary's `feature_names`.
    pub feature: usize,
    /// Position within the explained batch (not the dataset row id).
    pub instance: usize,
    /// Raw feature value, for coloring.
    pub value: f64,
    pub phi: Proba,
}

/// Global importance view over an explained batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary {
    pub feature_names: Vec<String>,
    /// Mean absolute contribution, feature x category.
    pub mean_abs: Vec<Proba>,
    /// Mean absolute contribution across all categories, per feature.
    pub mean_abs_overall: Vec<f64>,
    /// Features sorted by `mean_abs_overall` descending, ties by index.
    pub order_overall: Vec<usize>,
    /// Features sorted per category the same way.
    pub order_by_category: [Vec<usize>; N_CATEGORIES],
    pub beeswarm: Vec<BeeswarmPoint>,
}

fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Aggregates a [`ShapMatrix`] into mean-|phi| rankings and beeswarm
/// points.
pub fn shap_summary(shap: &ShapMatrix) -> Result<ShapSummary> {
    let n_i = shap.values.len();
    let n_f = shap.feature_names.len();
    if n_i == 0 || n_f == 0 {
        return Err(Error::Explain("empty attribution matrix".to_string()));
    }
    let mut mean_abs = vec![[0.0; N_CATEGORIES]; n_f];
    for inst in &shap.values {
        for f in 0..n_f {
            for k in 0..N_CATEGORIES {
                mean_abs[f][k] += inst[f][k].abs() / n_i as f64;
            }
        }
    }
    let mean_abs_overall: Vec<f64> = mean_abs
        .iter()
        .map(|m| m.iter().sum::<f64>() / N_CATEGORIES as f64)
        .collect();
    let order_overall = rank_descending(&mean_abs_overall);
    let order_by_category = std::array::from_fn(|k| {
        let per: Vec<f64> = mean_abs.iter().map(|m| m[k]).collect();
        rank_descending(&per)
    });
    let mut beeswarm = Vec::with_capacity(n_f * n_i);
    for f in 0..n_f {
        for i in 0..n_i {
            beeswarm.push(BeeswarmPoint {
                feature: f,
                instance: i,
                value: shap.feature_values[i][f],
                phi: shap.values[i][f],
            });
        }
    }
    Ok(ShapSummary {
        feature_names: shap.feature_names.clone(),
        mean_abs,
        mean_abs_overall,
        order_overall,
        order_by_category,
        beeswarm,
    })
}

/// One feature's share of a single prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceContribution {
    pub feature: String,
    /// Raw feature value at the instance.
    pub value: f64,
    pub phi: f64,
}

/// A single prediction decomposed for one category:
/// `base + sum(phi) = output`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceBreakdown {
    /// Dataset row id of the instance.
    pub instance: usize,
    pub category: usize,
    /// Argmax category of the model output at this instance.
    pub predicted: usize,
    pub output_kind: OutputKind,
    pub base: f64,
    pub output: f64,
    /// Sorted by |phi| descending, ties by feature order.
    pub contributions: Vec<ForceContribution>,
}

/// Decomposes one explained instance for one category. `instance` is the
/// dataset row id as recorded in the matrix's `instance_ids`.
pub fn force_breakdown(shap: &ShapMatrix, instance: usize, category: usize) -> Result<ForceBreakdown> {
    let row = shap
        .instance_ids
        .iter()
        .position(|&i| i == instance)
        .ok_or_else(|| {
            Error::Explain(format!(
                "instance {instance} is not part of the explained batch"
            ))
        })?;
    if category >= N_CATEGORIES {
        return Err(Error::Explain(format!(
            "category {category} out of range 0..{N_CATEGORIES}"
        )));
    }
    let scores: Vec<f64> = shap.values[row].iter().map(|p| p[category].abs()).collect();
    let contributions = rank_descending(&scores)
        .into_iter()
        .map(|f| ForceContribution {
            feature: shap.feature_names[f].clone(),
            value: shap.feature_values[row][f],
            phi: shap.values[row][f][category],
        })
        .collect();
    Ok(ForceBreakdown {
        instance,
        category,
        predicted: argmax(&shap.outputs[row]),
        output_kind: shap.output_kind,
        base: shap.base[category],
        output: shap.outputs[row][category],
        contributions,
    })
}
