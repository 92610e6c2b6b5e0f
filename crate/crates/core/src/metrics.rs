//! Classification metrics: confusion matrices, per-category and aggregated
//! precision/recall/F1, one-vs-rest ROC with AUC, and precision-recall
//! curves with average precision.
//!
//! Aggregates come in two flavors: macro (unweighted mean over categories)
//! and weighted (support-proportional mean). Leaderboards report the
//! weighted variant, under which recall coincides exactly with accuracy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{argmax, Proba};
use crate::N_CATEGORIES;

/// 3×3 count matrix; rows index the true category, columns the predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N_CATEGORIES]; N_CATEGORIES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// True positives for one-vs-rest category `c`.
    pub fn tp(&self, c: usize) -> u64 {
        self.counts[c][c]
    }

    /// False positives: predicted `c`, truly something else.
    pub fn fp(&self, c: usize) -> u64 {
        (0..N_CATEGORIES)
            .filter(|&i| i != c)
            .map(|i| self.counts[i][c])
            .sum()
    }

    /// False negatives: truly `c`, predicted something else.
    pub fn fn_(&self, c: usize) -> u64 {
        (0..N_CATEGORIES)
            .filter(|&j| j != c)
            .map(|j| self.counts[c][j])
            .sum()
    }

    /// True negatives: neither truly nor predictedly `c`.
    pub fn tn(&self, c: usize) -> u64 {
        self.total() - self.tp(c) - self.fp(c) - self.fn_(c)
    }

    /// Rows truly in category `c`.
    pub fn support(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }
}

/// Count predictions into a confusion matrix.
pub fn confusion(y_true: &[usize], y_pred: &[usize]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Validation(format!(
            "label lengths differ: {} true vs {} predicted",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Validation("no rows to evaluate".into()));
    }
    let mut counts = [[0u64; N_CATEGORIES]; N_CATEGORIES];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= N_CATEGORIES || p >= N_CATEGORIES {
            return Err(Error::Validation(format!(
                "label out of range: true {t}, predicted {p}"
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Full metric set for one evaluation. Threshold-free fields come from the
/// confusion matrix; `auc_ovr_macro` and `average_precision_macro` need
/// probability scores and stay 0 until [`evaluate`] fills them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub precision: [f64; N_CATEGORIES],
    pub recall: [f64; N_CATEGORIES],
    pub f1: [f64; N_CATEGORIES],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub auc_ovr_macro: f64,
    pub average_precision_macro: f64,
    /// Fields whose denominator was zero and were therefore defined as 0.
    pub zero_division: Vec<String>,
    /// Categories lacking positives or negatives, skipped by AUC/AP.
    pub skipped_categories: Vec<usize>,
}

fn ratio(num: u64, den: u64, field: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(field.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, per-category one-vs-rest precision/recall/F1, and the macro
/// and support-weighted aggregates. Zero-denominator fields are defined as
/// 0 and listed in `zero_division`.
pub fn classification_report(cm: &ConfusionMatrix) -> Result<MetricReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Validation("empty confusion matrix".into()));
    }
    let mut flags = Vec::new();
    let mut precision = [0.0; N_CATEGORIES];
    let mut recall = [0.0; N_CATEGORIES];
    let mut f1 = [0.0; N_CATEGORIES];
    for c in 0..N_CATEGORIES {
        let tp = cm.tp(c);
        precision[c] = ratio(tp, tp + cm.fp(c), &format!("precision[{c}]"), &mut flags);
        recall[c] = ratio(tp, tp + cm.fn_(c), &format!("recall[{c}]"), &mut flags);
        let pr = precision[c] + recall[c];
        if pr == 0.0 {
            flags.push(format!("f1[{c}]"));
        } else {
            f1[c] = 2.0 * precision[c] * recall[c] / pr;
        }
    }

    let diag: u64 = (0..N_CATEGORIES).map(|c| cm.tp(c)).sum();
    let accuracy = diag as f64 / total as f64;
    let weight = |c: usize| cm.support(c) as f64 / total as f64;
    // Support-weighted recall is Σ_c (support_c/total)·(tp_c/support_c);
    // the supports cancel, leaving Σ tp_c / total — accuracy itself. The
    // cancelled form keeps the identity bit-exact.
    let weighted_recall = accuracy;
    let weighted_precision = (0..N_CATEGORIES).map(|c| weight(c) * precision[c]).sum();
    let weighted_f1 = (0..N_CATEGORIES).map(|c| weight(c) * f1[c]).sum();
    let k = N_CATEGORIES as f64;

    Ok(MetricReport {
        accuracy,
        precision,
        recall,
        f1,
        macro_precision: precision.iter().sum::<f64>() / k,
        macro_recall: recall.iter().sum::<f64>() / k,
        macro_f1: f1.iter().sum::<f64>() / k,
        weighted_precision,
        weighted_recall,
        weighted_f1,
        auc_ovr_macro: 0.0,
        average_precision_macro: 0.0,
        zero_division: flags,
        skipped_categories: Vec::new(),
    })
}

/// A ROC or precision-recall curve with its area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoints {
    pub kind: CurveKind,
    pub points: Vec<(f64, f64)>,
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Roc,
    Pr,
}

/// One-vs-rest curves per category plus the macro-averaged area over the
/// categories where the curve is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrCurves {
    pub curves: [Option<CurvePoints>; N_CATEGORIES],
    pub macro_area: f64,
    /// Categories with no positives or no negatives in `y_true`.
    pub skipped: Vec<usize>,
}

fn check_scores(y_true: &[usize], scores: &[Proba]) -> Result<()> {
    if y_true.len() != scores.len() {
        return Err(Error::Validation(format!(
            "label lengths differ: {} labels vs {} score rows",
            y_true.len(),
            scores.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Validation("no rows to evaluate".into()));
    }
    for (i, s) in scores.iter().enumerate() {
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite score in row {i}")));
        }
    }
    if let Some(&t) = y_true.iter().find(|&&t| t >= N_CATEGORIES) {
        return Err(Error::Validation(format!("label out of range: {t}")));
    }
    Ok(())
}

/// Indices split into positives/negatives for one-vs-rest category `c`,
/// or `None` when either side is empty.
fn ovr_split(y_true: &[usize], c: usize) -> Option<(u64, u64)> {
    let pos = y_true.iter().filter(|&&t| t == c).count() as u64;
    let neg = y_true.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        None
    } else {
        Some((pos, neg))
    }
}

/// Mid-rank AUC: the probability a random positive outscores a random
/// negative, ties counting half.
fn rank_auc(scored: &[(f64, bool)], pos: u64, neg: u64) -> f64 {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scored[order[j + 1]].0 == scored[order[i]].0 {
            j += 1;
        }
        // 1-based positions i+1 ..= j+1 share the mid rank.
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if scored[idx].1 {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    let p = pos as f64;
    (rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64)
}

/// ROC points for one category: descending-threshold sweep grouped by
/// distinct score, from (0,0) to (1,1).
fn roc_points(scored: &[(f64, bool)], pos: u64, neg: u64) -> Vec<(f64, f64)> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scored[order[j + 1]].0 == scored[order[i]].0 {
            j += 1;
        }
        for &idx in &order[i..=j] {
            if scored[idx].1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        i = j + 1;
    }
    points
}

/// One-vs-rest ROC curves and mid-rank AUC per category; macro AUC is the
/// unweighted mean over the categories where both sides are present.
pub fn roc_auc_ovr(y_true: &[usize], scores: &[Proba]) -> Result<OvrCurves> {
    check_scores(y_true, scores)?;
    let mut curves: [Option<CurvePoints>; N_CATEGORIES] = [None, None, None];
    let mut skipped = Vec::new();
    let mut sum = 0.0;
    let mut defined = 0usize;
    for c in 0..N_CATEGORIES {
        let Some((pos, neg)) = ovr_split(y_true, c) else {
            skipped.push(c);
            continue;
        };
        let scored: Vec<(f64, bool)> = y_true
            .iter()
            .zip(scores)
            .map(|(&t, s)| (s[c], t == c))
            .collect();
        let auc = rank_auc(&scored, pos, neg);
        curves[c] = Some(CurvePoints {
            kind: CurveKind::Roc,
            points: roc_points(&scored, pos, neg),
            area: auc,
        });
        sum += auc;
        defined += 1;
    }
    if defined == 0 {
        return Err(Error::Validation(
            "every category lacks positives or negatives; AUC undefined".into(),
        ));
    }
    Ok(OvrCurves {
        curves,
        macro_area: sum / defined as f64,
        skipped,
    })
}

/// Precision-recall points and the step-wise average precision for one
/// category. AP = Σ Δrecall × precision over descending thresholds.
fn pr_curve(scored: &[(f64, bool)], pos: u64) -> (Vec<(f64, f64)>, f64) {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0));
    let mut points = vec![(0.0, 1.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scored[order[j + 1]].0 == scored[order[i]].0 {
            j += 1;
        }
        for &idx in &order[i..=j] {
            if scored[idx].1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push((recall, precision));
        i = j + 1;
    }
    (points, ap)
}

/// One-vs-rest precision-recall curves with average precision; macro AP is
/// the unweighted mean over defined categories.
pub fn pr_average_precision(y_true: &[usize], scores: &[Proba]) -> Result<OvrCurves> {
    check_scores(y_true, scores)?;
    let mut curves: [Option<CurvePoints>; N_CATEGORIES] = [None, None, None];
    let mut skipped = Vec::new();
    let mut sum = 0.0;
    let mut defined = 0usize;
    for c in 0..N_CATEGORIES {
        let Some((pos, _neg)) = ovr_split(y_true, c) else {
            skipped.push(c);
            continue;
        };
        let scored: Vec<(f64, bool)> = y_true
            .iter()
            .zip(scores)
            .map(|(&t, s)| (s[c], t == c))
            .collect();
        let (points, ap) = pr_curve(&scored, pos);
        curves[c] = Some(CurvePoints {
            kind: CurveKind::Pr,
            points,
            area: ap,
        });
        sum += ap;
        defined += 1;
    }
    if defined == 0 {
        return Err(Error::Validation(
            "every category lacks positives or negatives; AP undefined".into(),
        ));
    }
    Ok(OvrCurves {
        curves,
        macro_area: sum / defined as f64,
        skipped,
    })
}

/// Evaluate probability predictions end to end: argmax to hard labels,
/// confusion-derived metrics, then macro AUC and average precision.
pub fn evaluate(y_true: &[usize], scores: &[Proba]) -> Result<MetricReport> {
    check_scores(y_true, scores)?;
    let y_pred: Vec<usize> = scores.iter().map(|s| argmax(s)).collect();
    let cm = confusion(y_true, &y_pred)?;
    let mut report = classification_report(&cm)?;
    let roc = roc_auc_ovr(y_true, scores)?;
    let pr = pr_average_precision(y_true, scores)?;
    report.auc_ovr_macro = roc.macro_area;
    report.average_precision_macro = pr.macro_area;
    report.skipped_categories = roc.skipped;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::stream;

    #[test]
    fn confusion_counts_and_errors() {
        let cm = confusion(&[0, 0, 1], &[0, 1, 1]).unwrap();
        assert_eq!(cm.counts[0][0], 1);
        assert_eq!(cm.counts[0][1], 1);
        assert_eq!(cm.counts[1][1], 1);
        assert_eq!(cm.total(), 3);

        let diag = confusion(&[0, 1, 2], &[0, 1, 2]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(diag.counts[i][j], u64::from(i == j));
            }
        }

        assert!(confusion(&[0, 1, 2], &[0, 1]).is_err());
        assert!(confusion(&[], &[]).is_err());
        assert!(confusion(&[3], &[0]).is_err());
    }

    #[test]
    fn binary_style_counts_match_hand_evaluation() {
        // One-vs-rest counts for category 0: TP=2, FP=1, FN=1, TN=6.
        // Off-category rows split between categories 1 and 2 so that the
        // matrix stays 3×3 while category 0 sees exactly those counts.
        let cm = ConfusionMatrix {
            counts: [[2, 1, 0], [1, 3, 0], [0, 0, 3]],
        };
        assert_eq!((cm.tp(0), cm.fp(0), cm.fn_(0), cm.tn(0)), (2, 1, 1, 6));
        let r = classification_report(&cm).unwrap();
        assert!((r.precision[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.recall[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.f1[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.accuracy - 0.8).abs() < 1e-15);
    }

    #[test]
    fn perfect_diagonal_scores_one_everywhere() {
        let cm = confusion(&[0, 1, 2, 1], &[0, 1, 2, 1]).unwrap();
        let r = classification_report(&cm).unwrap();
        assert_eq!(r.accuracy, 1.0);
        for c in 0..3 {
            assert_eq!(r.precision[c], 1.0);
            assert_eq!(r.recall[c], 1.0);
            assert_eq!(r.f1[c], 1.0);
        }
        assert_eq!(r.macro_f1, 1.0);
        assert_eq!(r.weighted_f1, 1.0);
        assert!(r.zero_division.is_empty());
    }

    #[test]
    fn zero_denominators_become_zero_and_are_flagged() {
        // Category 2 never occurs and is never predicted.
        let cm = confusion(&[0, 1], &[1, 0]).unwrap();
        let r = classification_report(&cm).unwrap();
        assert_eq!(r.precision[2], 0.0);
        assert_eq!(r.recall[2], 0.0);
        assert!(r.zero_division.contains(&"precision[2]".to_string()));
        assert!(r.zero_division.contains(&"recall[2]".to_string()));
        assert!(r.zero_division.contains(&"f1[2]".to_string()));
        // Both present categories were fully misclassified.
        assert!(r.zero_division.contains(&"f1[0]".to_string()));
        assert_eq!(r.accuracy, 0.0);
    }

    #[test]
    fn weighted_recall_equals_accuracy_on_random_matrices() {
        let mut rng = stream::rng_for(77, "metrics-test", &[]);
        for _ in 0..100 {
            let mut counts = [[0u64; 3]; 3];
            for row in counts.iter_mut() {
                for cell in row.iter_mut() {
                    *cell = rng.random_range(0..20);
                }
            }
            let cm = ConfusionMatrix { counts };
            if cm.total() == 0 {
                continue;
            }
            let r = classification_report(&cm).unwrap();
            // Bit-exact identity, not approximate.
            assert_eq!(r.weighted_recall, r.accuracy);
            // And the identity really is the support-weighted mean of the
            // per-category recalls, not an artifact of shared code.
            let total = cm.total() as f64;
            let explicit: f64 = (0..3)
                .map(|c| cm.support(c) as f64 / total * r.recall[c])
                .sum();
            assert!((explicit - r.accuracy).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_scores_reach_auc_one() {
        let y = vec![0, 0, 1, 1, 2, 2];
        let scores: Vec<Proba> = y
            .iter()
            .map(|&c| {
                let mut s = [0.1, 0.1, 0.1];
                s[c] = 0.8;
                s
            })
            .collect();
        let roc = roc_auc_ovr(&y, &scores).unwrap();
        assert_eq!(roc.macro_area, 1.0);
        for c in 0..3 {
            let curve = roc.curves[c].as_ref().unwrap();
            assert_eq!(curve.area, 1.0);
            assert_eq!(curve.points.first(), Some(&(0.0, 0.0)));
            assert_eq!(curve.points.last(), Some(&(1.0, 1.0)));
        }
    }

    #[test]
    fn identical_scores_give_half_auc() {
        let y = vec![0, 0, 1, 1, 2, 2];
        let scores = vec![[1.0 / 3.0; 3]; 6];
        let roc = roc_auc_ovr(&y, &scores).unwrap();
        assert!((roc.macro_area - 0.5).abs() < 1e-12);
    }

    #[test]
    fn four_pair_example_gives_three_quarters() {
        // Positives scored 0.9 and 0.8; negatives 0.7 and 0.85. Of the four
        // positive-negative pairs, three rank the positive higher.
        let y = vec![0, 0, 1, 2];
        let scores = vec![
            [0.9, 0.05, 0.05],
            [0.8, 0.1, 0.1],
            [0.7, 0.2, 0.1],
            [0.85, 0.05, 0.1],
        ];
        let roc = roc_auc_ovr(&y, &scores).unwrap();
        let auc0 = roc.curves[0].as_ref().unwrap().area;
        assert!((auc0 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn skipped_categories_are_flagged_and_all_skipped_errors() {
        // Category 2 absent: skipped but the rest still evaluate.
        let y = vec![0, 0, 1];
        let scores = vec![[0.6, 0.3, 0.1], [0.5, 0.4, 0.1], [0.2, 0.7, 0.1]];
        let roc = roc_auc_ovr(&y, &scores).unwrap();
        assert_eq!(roc.skipped, vec![2]);
        assert!(roc.curves[2].is_none());

        // Only one category present: nothing is defined.
        let err = roc_auc_ovr(&[1, 1], &[[0.1, 0.8, 0.1], [0.2, 0.7, 0.1]]);
        assert!(err.is_err());
    }

    #[test]
    fn perfect_ranking_gives_ap_one() {
        let y = vec![0, 0, 1, 1, 2, 2];
        let scores: Vec<Proba> = y
            .iter()
            .map(|&c| {
                let mut s = [0.1, 0.1, 0.1];
                s[c] = 0.8;
                s
            })
            .collect();
        let pr = pr_average_precision(&y, &scores).unwrap();
        assert!((pr.macro_area - 1.0).abs() < 1e-12);
        let curve = pr.curves[0].as_ref().unwrap();
        assert_eq!(curve.points[0], (0.0, 1.0));
    }

    #[test]
    fn single_positive_ranked_second_gives_half() {
        // Category-0 scores: negative 0.9, positive 0.8, negative 0.7.
        let y = vec![1, 0, 2];
        let scores = vec![[0.9, 0.05, 0.05], [0.8, 0.15, 0.05], [0.7, 0.1, 0.2]];
        let pr = pr_average_precision(&y, &scores).unwrap();
        let ap0 = pr.curves[0].as_ref().unwrap().area;
        assert!((ap0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_tied_scores_give_prevalence_ap() {
        let y = vec![0, 1, 1, 1]; // prevalence of category 0 is 1/4
        let scores = vec![[0.5, 0.3, 0.2]; 4];
        let pr = pr_average_precision(&y, &scores).unwrap();
        let ap0 = pr.curves[0].as_ref().unwrap().area;
        assert!((ap0 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn evaluate_fills_auc_and_ap() {
        let y = vec![0, 0, 1, 1, 2, 2];
        let scores: Vec<Proba> = y
            .iter()
            .map(|&c| {
                let mut s = [0.2, 0.2, 0.2];
                s[c] = 0.6;
                s
            })
            .collect();
        let r = evaluate(&y, &scores).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.auc_ovr_macro, 1.0);
        assert!((r.average_precision_macro - 1.0).abs() < 1e-12);
        assert!(r.skipped_categories.is_empty());
    }

    /// Random evaluation sets for the curve properties: scores are arbitrary
    /// positive vectors (the rank statistics never assume normalization) and
    /// three fixed rows guarantee every category has positives and negatives.
    fn arb_eval_set() -> impl Strategy<Value = (Vec<usize>, Vec<Proba>)> {
        proptest::collection::vec((0usize..3, [0.01f64..1.0, 0.01..1.0, 0.01..1.0]), 3..40)
            .prop_map(|rows| {
                let mut y: Vec<usize> = rows.iter().map(|r| r.0).collect();
                let mut s: Vec<Proba> = rows.iter().map(|r| r.1).collect();
                y.extend([0, 1, 2]);
                s.extend([[0.7, 0.2, 0.1], [0.15, 0.65, 0.2], [0.05, 0.2, 0.75]]);
                (y, s)
            })
    }

    fn trapezoid(points: &[(f64, f64)]) -> f64 {
        points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn trapezoid_area_matches_rank_auc((y, s) in arb_eval_set()) {
            let roc = roc_auc_ovr(&y, &s).unwrap();
            for curve in roc.curves.iter().flatten() {
                prop_assert!((trapezoid(&curve.points) - curve.area).abs() < 1e-12);
                prop_assert_eq!(curve.points.first(), Some(&(0.0, 0.0)));
                prop_assert_eq!(curve.points.last(), Some(&(1.0, 1.0)));
            }
        }

        #[test]
        fn auc_is_invariant_under_monotone_transforms((y, s) in arb_eval_set()) {
            let base = roc_auc_ovr(&y, &s).unwrap();
            let transformed: Vec<Proba> =
                s.iter().map(|r| [r[0].sqrt(), r[1].sqrt(), r[2].sqrt()]).collect();
            let after = roc_auc_ovr(&y, &transformed).unwrap();
            prop_assert!((base.macro_area - after.macro_area).abs() < 1e-12);
        }

        #[test]
        fn macro_metrics_survive_category_relabeling((y, s) in arb_eval_set()) {
            // Cyclic permutation 0→1→2→0 applied to labels and score columns.
            let perm = [1usize, 2, 0];
            let y2: Vec<usize> = y.iter().map(|&t| perm[t]).collect();
            let s2: Vec<Proba> = s.iter().map(|r| {
                let mut out = [0.0; 3];
                for c in 0..3 {
                    out[perm[c]] = r[c];
                }
                out
            }).collect();
            let a = evaluate(&y, &s).unwrap();
            let b = evaluate(&y2, &s2).unwrap();
            prop_assert!((a.macro_precision - b.macro_precision).abs() < 1e-12);
            prop_assert!((a.macro_recall - b.macro_recall).abs() < 1e-12);
            prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
            prop_assert!((a.auc_ovr_macro - b.auc_ovr_macro).abs() < 1e-12);
            prop_assert!((a.accuracy - b.accuracy).abs() < 1e-12);
        }
    }
}
