//! CART-style decision trees: the shared substrate for the single tree,
//! both forest variants, boosting, and the boosting stumps.
//!
//! Splits test `x[feature] <= threshold` (left on true). Exhaustive mode
//! scans midpoints between consecutive distinct sorted values, so trees
//! are a pure function of the data; random-threshold mode draws one
//! uniform cut per candidate feature. Ties in split gain resolve to the
//! lower feature index and lower threshold. Every node records its cover
//! (training rows routed through it, bootstrap multiplicity included).

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::N_CATEGORIES;

/// Gini impurity `1 - sum((count_c / total)^2)` of a nonnegative count
/// (or weight) vector.
pub fn gini_impurity(counts: &[f64]) -> Result<f64> {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::Model("gini impurity of an empty count vector".to_string()));
    }
    Ok(gini_of(counts, total))
}

fn gini_of(counts: &[f64], total: f64) -> f64 {
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    /// Scan all midpoints between consecutive distinct values.
    Exhaustive,
    /// One uniform threshold per candidate feature (extra-trees style).
    RandomThreshold,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    /// 0 means unlimited depth.
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Number of features considered per node; 0 means all.
    pub mtry: usize,
    pub split_mode: SplitMode,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 0,
            min_samples_split: 2,
            min_samples_leaf: 1,
            mtry: 0,
            split_mode: SplitMode::Exhaustive,
        }
    }
}

/// What the tree fits: class labels (optionally weighted) under Gini
/// impurity, or real targets under squared error.
#[derive(Clone, Copy)]
pub enum TreeTask<'a> {
    Classify {
        labels: &'a [usize],
        weights: Option<&'a [f64]>,
    },
    Regress {
        targets: &'a [f64],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        /// Per-category probabilities for classification; a single mean
        /// for regression.
        value: Vec<f64>,
        cover: usize,
    },
    Internal {
        feature: usize,
        threshold: f64,
        cover: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn cover(&self) -> usize {
        match self {
            TreeNode::Leaf { cover, .. } | TreeNode::Internal { cover, .. } => *cover,
        }
    }

    /// Walk to the leaf for `x` and return its value vector.
    pub fn leaf_value(&self, x: &[f64]) -> &[f64] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return value,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Mutable handle on the leaf `x` falls into (used by boosting to
    /// replace raw regression means with Newton-step values).
    pub fn leaf_mut(&mut self, x: &[f64]) -> &mut Vec<f64> {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return value,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

/// Node statistics: (leaf value, impurity, weight total).
fn node_stats(task: &TreeTask, rows: &[usize]) -> (Vec<f64>, f64, f64) {
    match task {
        TreeTask::Classify { labels, weights } => {
            let mut w = [0.0f64; N_CATEGORIES];
            for &r in rows {
                w[labels[r]] += weights.map_or(1.0, |ws| ws[r]);
            }
            let total: f64 = w.iter().sum();
            let value: Vec<f64> = w.iter().map(|c| c / total).collect();
            (value, gini_of(&w, total), total)
        }
        TreeTask::Regress { targets } => {
            let n = rows.len() as f64;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for &r in rows {
                sum += targets[r];
                sumsq += targets[r] * targets[r];
            }
            let mean = sum / n;
            let var = (sumsq / n - mean * mean).max(0.0);
            (vec![mean], var, n)
        }
    }
}

/// Candidate features for a node: all of them (in order, consuming no
/// randomness) when `mtry` covers the full set, otherwise a sorted random
/// subset of size `mtry`.
fn candidate_features(d: usize, mtry: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if mtry == 0 || mtry >= d {
        return (0..d).collect();
    }
    use rand::Rng;
    let mut all: Vec<usize> = (0..d).collect();
    for i in 0..mtry {
        let j = rng.random_range(i..d);
        all.swap(i, j);
    }
    all.truncate(mtry);
    all.sort_unstable();
    all
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Grow a tree on the given row indices (duplicates allowed: bootstrap
/// multiplicity counts toward covers, impurities, and size limits).
pub fn build_tree(
    matrix: &Matrix,
    task: &TreeTask,
    rows: &[usize],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Result<TreeNode> {
    if rows.is_empty() {
        return Err(Error::Model("cannot grow a tree on zero rows".to_string()));
    }
    match task {
        TreeTask::Classify { labels, .. } => {
            if let Some(&r) = rows.iter().find(|&&r| labels[r] >= N_CATEGORIES) {
                return Err(Error::Model(format!("label {} out of range", labels[r])));
            }
        }
        TreeTask::Regress { .. } => {}
    }
    Ok(grow(matrix, task, rows, params, rng, 0))
}

fn grow(
    matrix: &Matrix,
    task: &TreeTask,
    rows: &[usize],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
    depth: usize,
) -> TreeNode {
    let (value, impurity, _) = node_stats(task, rows);
    let cover = rows.len();
    let depth_capped = params.max_depth > 0 && depth >= params.max_depth;
    if impurity <= 0.0
        || depth_capped
        || cover < params.min_samples_split
        || cover < 2 * params.min_samples_leaf
    {
        return TreeNode::Leaf { value, cover };
    }

    let features = candidate_features(matrix.n_cols(), params.mtry, rng);
    let mut best: Option<BestSplit> = None;
    for &f in &features {
        let found = match params.split_mode {
            SplitMode::Exhaustive => best_exhaustive_split(matrix, task, rows, f, impurity, params),
            SplitMode::RandomThreshold => {
                best_random_split(matrix, task, rows, f, impurity, params, rng)
            }
        };
        if let Some(s) = found {
            // Strict improvement keeps the earliest (feature, threshold)
            // among equal gains, because features ascend and thresholds
            // ascend within a feature.
            if best.as_ref().is_none_or(|b| s.gain > b.gain) {
                best = Some(s);
            }
        }
    }

    // Require a strictly positive decrease (relative guard against
    // float noise on uninformative splits).
    let Some(best) = best.filter(|b| b.gain > 1e-12 * impurity) else {
        return TreeNode::Leaf { value, cover };
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&r| matrix.get(r, best.feature) <= best.threshold);
    let left = grow(matrix, task, &left_rows, params, rng, depth + 1);
    let right = grow(matrix, task, &right_rows, params, rng, depth + 1);
    TreeNode::Internal {
        feature: best.feature,
        threshold: best.threshold,
        cover,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Accumulator for one side of a candidate split.
#[derive(Clone, Copy)]
struct SideStats {
    class_w: [f64; N_CATEGORIES],
    sum: f64,
    sumsq: f64,
    weight: f64,
    rows: usize,
}

impl SideStats {
    fn empty() -> Self {
        SideStats {
            class_w: [0.0; N_CATEGORIES],
            sum: 0.0,
            sumsq: 0.0,
            weight: 0.0,
            rows: 0,
        }
    }

    fn add(&mut self, task: &TreeTask, r: usize) {
        match task {
            TreeTask::Classify { labels, weights } => {
                let w = weights.map_or(1.0, |ws| ws[r]);
                self.class_w[labels[r]] += w;
                self.weight += w;
            }
            TreeTask::Regress { targets } => {
                self.sum += targets[r];
                self.sumsq += targets[r] * targets[r];
                self.weight += 1.0;
            }
        }
        self.rows += 1;
    }

    fn impurity(&self, task: &TreeTask) -> f64 {
        match task {
            TreeTask::Classify { .. } => gini_of(&self.class_w, self.weight),
            TreeTask::Regress { .. } => {
                let mean = self.sum / self.weight;
                (self.sumsq / self.weight - mean * mean).max(0.0)
            }
        }
    }
}

fn weighted_child_impurity(task: &TreeTask, l: &SideStats, r: &SideStats) -> f64 {
    let total = l.weight + r.weight;
    (l.weight * l.impurity(task) + r.weight * r.impurity(task)) / total
}

/// Best midpoint split of one feature: sort the node's rows by value and
/// sweep, evaluating each boundary between distinct values.
fn best_exhaustive_split(
    matrix: &Matrix,
    task: &TreeTask,
    rows: &[usize],
    feature: usize,
    parent_impurity: f64,
    params: &TreeParams,
) -> Option<BestSplit> {
    let mut order: Vec<usize> = rows.to_vec();
    order.sort_by(|&a, &b| matrix.get(a, feature).total_cmp(&matrix.get(b, feature)));

    let mut left = SideStats::empty();
    let mut right = SideStats::empty();
    for &r in &order {
        right.add(task, r);
    }

    let mut best: Option<BestSplit> = None;
    for i in 0..order.len() - 1 {
        let r = order[i];
        left.add(task, r);
        // Incremental subtraction can drift by float epsilons, which is
        // orders of magnitude below the relative gain gate applied by the
        // caller.
        right_sub(&mut right, task, r);
        let v = matrix.get(r, feature);
        let v_next = matrix.get(order[i + 1], feature);
        if v == v_next {
            continue;
        }
        if left.rows < params.min_samples_leaf || right.rows < params.min_samples_leaf {
            continue;
        }
        let threshold = v + (v_next - v) / 2.0;
        let gain = parent_impurity - weighted_child_impurity(task, &left, &right);
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            best = Some(BestSplit {
                gain,
                feature,
                threshold,
            });
        }
    }
    best
}

fn right_sub(side: &mut SideStats, task: &TreeTask, r: usize) {
    match task {
        TreeTask::Classify { labels, weights } => {
            let w = weights.map_or(1.0, |ws| ws[r]);
            side.class_w[labels[r]] -= w;
            side.weight -= w;
        }
        TreeTask::Regress { targets } => {
            side.sum -= targets[r];
            side.sumsq -= targets[r] * targets[r];
            side.weight -= 1.0;
        }
    }
    side.rows -= 1;
}

/// Extra-trees split of one feature: a single uniform threshold between
/// the node's min and max values.
fn best_random_split(
    matrix: &Matrix,
    task: &TreeTask,
    rows: &[usize],
    feature: usize,
    parent_impurity: f64,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Option<BestSplit> {
    use rand::Rng;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &r in rows {
        let v = matrix.get(r, feature);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        return None;
    }
    let threshold = lo + rng.random::<f64>() * (hi - lo);
    let mut left = SideStats::empty();
    let mut right = SideStats::empty();
    for &r in rows {
        if matrix.get(r, feature) <= threshold {
            left.add(task, r);
        } else {
            right.add(task, r);
        }
    }
    if left.rows < params.min_samples_leaf.max(1) || right.rows < params.min_samples_leaf.max(1) {
        return None;
    }
    let gain = parent_impurity - weighted_child_impurity(task, &left, &right);
    Some(BestSplit {
        gain,
        feature,
        threshold,
    })
}

/// Check the structural invariants used throughout: parent covers equal
/// the sum of child covers, and classification leaves sit on the simplex.
pub fn check_tree(node: &TreeNode, classification: bool) -> bool {
    match node {
        TreeNode::Leaf { value, cover } => {
            if *cover == 0 {
                return false;
            }
            if classification {
                let sum: f64 = value.iter().sum();
                value.len() == N_CATEGORIES
                    && value.iter().all(|&v| v >= 0.0)
                    && (sum - 1.0).abs() <= 1e-9
            } else {
                value.len() == 1
            }
        }
        TreeNode::Internal {
            cover, left, right, ..
        } => {
            *cover == left.cover() + right.cover()
                && check_tree(left, classification)
                && check_tree(right, classification)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream;

    fn col(values: &[f64]) -> Matrix {
        Matrix::from_rows(values.iter().map(|&v| vec![v]).collect())
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini_impurity(&[0.0, 10.0, 0.0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[5.0, 5.0]).unwrap(), 0.5);
        let g = gini_impurity(&[476.0, 1363.0, 6480.0]).unwrap();
        assert!((g - 0.3632).abs() < 1e-4, "got {g}");
        assert!(gini_impurity(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn exhaustive_split_finds_the_obvious_midpoint() {
        let m = col(&[1.0, 2.0, 10.0, 11.0]);
        let labels = vec![0, 0, 1, 1];
        let task = TreeTask::Classify {
            labels: &labels,
            weights: None,
        };
        let rows: Vec<usize> = (0..4).collect();
        let mut rng = stream::rng(0);
        let tree = build_tree(&m, &task, &rows, &TreeParams::default(), &mut rng).unwrap();
        match &tree {
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
                cover,
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 6.0);
                assert_eq!(*cover, 4);
                assert_eq!(left.leaf_value(&[0.0]), &[1.0, 0.0, 0.0]);
                assert_eq!(right.leaf_value(&[99.0]), &[0.0, 1.0, 0.0]);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        assert!(check_tree(&tree, true));
    }

    #[test]
    fn uniform_labels_give_a_single_leaf() {
        let m = col(&[1.0, 2.0, 3.0, 4.0]);
        let labels = vec![2, 2, 2, 2];
        let task = TreeTask::Classify {
            labels: &labels,
            weights: None,
        };
        let tree = build_tree(
            &m,
            &task,
            &[0, 1, 2, 3],
            &TreeParams::default(),
            &mut stream::rng(1),
        )
        .unwrap();
        assert_eq!(tree.depth(), 0);
        assert_eq!(tree.leaf_value(&[2.0]), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn depth_zero_via_max_depth_gives_prior_leaf() {
        let m = col(&[1.0, 2.0, 10.0, 11.0]);
        let labels = vec![0, 0, 1, 1];
        let task = TreeTask::Classify {
            labels: &labels,
            weights: None,
        };
        // max_depth of 0 means unlimited, so force a root leaf with a
        // min_samples_split above the row count.
        let params = TreeParams {
            min_samples_split: 5,
            ..TreeParams::default()
        };
        let tree = build_tree(&m, &task, &[0, 1, 2, 3], &params, &mut stream::rng(1)).unwrap();
        assert_eq!(tree.depth(), 0);
        assert_eq!(tree.leaf_value(&[5.0]), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn covers_sum_on_a_nontrivial_tree() {
        let data = crate::dataset::synthesize_table1(400, 5, true).unwrap();
        let labels = data.label_codes();
        let task = TreeTask::Classify {
            labels: &labels,
            weights: None,
        };
        let rows: Vec<usize> = (0..400).collect();
        let tree = build_tree(
            data.matrix(),
            &task,
            &rows,
            &TreeParams::default(),
            &mut stream::rng(3),
        )
        .unwrap();
        assert_eq!(tree.cover(), 400);
        assert!(check_tree(&tree, true));
        assert!(tree.depth() > 2, "expected a real tree on mixed labels");
    }

    #[test]
    fn regression_tree_fits_means() {
        let m = col(&[0.0, 1.0, 10.0, 11.0]);
        let targets = vec![1.0, 1.0, 5.0, 7.0];
        let task = TreeTask::Regress { targets: &targets };
        let tree = build_tree(
            &m,
            &task,
            &[0, 1, 2, 3],
            &TreeParams::default(),
            &mut stream::rng(2),
        )
        .unwrap();
        assert_eq!(tree.leaf_value(&[0.5])[0], 1.0);
        assert_eq!(tree.leaf_value(&[10.0])[0], 5.0);
        assert_eq!(tree.leaf_value(&[11.0])[0], 7.0);
        assert!(check_tree(&tree, false));
    }

    #[test]
    fn random_threshold_mode_is_seed_deterministic() {
        let data = crate::dataset::synthesize_table1(300, 8, false).unwrap();
        let labels = data.label_codes();
        let task = TreeTask::Classify {
            labels: &labels,
            weights: None,
        };
        let rows: Vec<usize> = (0..300).collect();
        let params = TreeParams {
            split_mode: SplitMode::RandomThreshold,
            mtry: 4,
            ..TreeParams::default()
        };
        let t1 = build_tree(data.matrix(), &task, &rows, &params, &mut stream::rng(7)).unwrap();
        let t2 = build_tree(data.matrix(), &task, &rows, &params, &mut stream::rng(7)).unwrap();
        let t3 = build_tree(data.matrix(), &task, &rows, &params, &mut stream::rng(8)).unwrap();
        assert_eq!(t1, t2);
        assert_ne!(t1, t3, "different seeds should explore different splits");
        assert!(check_tree(&t1, true));
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let m = col(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 100.0]);
        let labels = vec![0, 0, 0, 0, 1, 1, 1, 2];
        let task = TreeTask::Classify {
            labels: &labels,
            weights: None,
        };
        let params = TreeParams {
            min_samples_leaf: 3,
            ..TreeParams::default()
        };
        let rows: Vec<usize> = (0..8).collect();
        let tree = build_tree(&m, &task, &rows, &params, &mut stream::rng(0)).unwrap();
        fn min_leaf_cover(t: &TreeNode) -> usize {
            match t {
                TreeNode::Leaf { cover, .. } => *cover,
                TreeNode::Internal { left, right, .. } => {
                    min_leaf_cover(left).min(min_leaf_cover(right))
                }
            }
        }
        assert!(min_leaf_cover(&tree) >= 3);
    }
}
