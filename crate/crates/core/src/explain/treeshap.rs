//! Path-dependent Shapley attribution for a single tree: a polynomial-time
//! walk that carries, for every subtree, the proportion of feature subsets
//! flowing down each branch, split into "feature present" (follow the
//! instance) and "feature absent" (split by cover share) fractions.
//!
//! The output equals brute-force enumeration of the cover-weighted
//! tree-conditional coalition game.

use crate::models::tree::TreeNode;

/// One step of the unique-feature path: the branch proportion when the
/// feature is absent (`zero`), present (`one`), and the accumulated
/// permutation weight (`pw`).
#[derive(Debug, Clone, Copy)]
struct PathEl {
    feature: usize,
    zero: f64,
    one: f64,
    pw: f64,
}

/// Marker for the path's initial element, which carries no feature.
const NO_FEATURE: usize = usize::MAX;

fn extend(path: &mut Vec<PathEl>, zero: f64, one: f64, feature: usize) {
    let l = path.len();
    path.push(PathEl {
        feature,
        zero,
        one,
        pw: if l == 0 { 1.0 } else { 0.0 },
    });
    for i in (0..l).rev() {
        path[i + 1].pw += one * path[i].pw * (i + 1) as f64 / (l + 1) as f64;
        path[i].pw = zero * path[i].pw * (l - i) as f64 / (l + 1) as f64;
    }
}

fn unwind(path: &mut Vec<PathEl>, idx: usize) {
    let l = path.len() - 1;
    let one = path[idx].one;
    let zero = path[idx].zero;
    let mut carry = path[l].pw;
    for i in (0..l).rev() {
        if one != 0.0 {
            let tmp = path[i].pw;
            path[i].pw = carry * (l + 1) as f64 / ((i + 1) as f64 * one);
            carry = tmp - path[i].pw * zero * (l - i) as f64 / (l + 1) as f64;
        } else {
            path[i].pw = path[i].pw * (l + 1) as f64 / (zero * (l - i) as f64);
        }
    }
    for i in idx..l {
        let next = path[i + 1];
        path[i].feature = next.feature;
        path[i].zero = next.zero;
        path[i].one = next.one;
    }
    path.pop();
}

/// Total permutation weight the path would carry with element `idx`
/// removed; used at leaves without mutating the path.
fn unwound_sum(path: &[PathEl], idx: usize) -> f64 {
    let l = path.len() - 1;
    let one = path[idx].one;
    let zero = path[idx].zero;
    let mut total = 0.0;
    if one != 0.0 {
        let mut carry = path[l].pw;
        for i in (0..l).rev() {
            let tmp = carry / ((i + 1) as f64 * one);
            total += tmp;
            carry = path[i].pw - tmp * zero * (l - i) as f64;
        }
    } else {
        for i in (0..l).rev() {
            total += path[i].pw / (zero * (l - i) as f64);
        }
    }
    total * (l + 1) as f64
}

fn recurse(
    node: &TreeNode,
    x: &[f64],
    parent_path: &[PathEl],
    pz: f64,
    po: f64,
    pf: usize,
    phi: &mut [Vec<f64>],
) {
    let mut path = parent_path.to_vec();
    extend(&mut path, pz, po, pf);
    match node {
        TreeNode::Leaf { value, .. } => {
            for i in 1..path.len() {
                let w = unwound_sum(&path, i);
                let el = path[i];
                for (j, v) in value.iter().enumerate() {
                    phi[el.feature][j] += w * (el.one - el.zero) * v;
                }
            }
        }
        TreeNode::Internal {
            feature,
            threshold,
            cover,
            left,
            right,
        } => {
            let (hot, cold) = if x[*feature] <= *threshold {
                (left, right)
            } else {
                (right, left)
            };
            let hot_zero = hot.cover() as f64 / *cover as f64;
            let cold_zero = cold.cover() as f64 / *cover as f64;
            let (mut iz, mut io) = (1.0, 1.0);
            if let Some(k) = path.iter().position(|e| e.feature == *feature) {
                iz = path[k].zero;
                io = path[k].one;
                unwind(&mut path, k);
            }
            recurse(hot, x, &path, hot_zero * iz, io, *feature, phi);
            recurse(cold, x, &path, cold_zero * iz, 0.0, *feature, phi);
        }
    }
}

/// Per-feature, per-output attributions for one tree at instance `x`.
pub(crate) fn tree_phi(
    tree: &TreeNode,
    x: &[f64],
    n_features: usize,
    n_outputs: usize,
) -> Vec<Vec<f64>> {
    let mut phi = vec![vec![0.0; n_outputs]; n_features];
    recurse(tree, x, &[], 1.0, 1.0, NO_FEATURE, &mut phi);
    phi
}

/// Cover-weighted mean leaf value: the tree's output under the empty
/// coalition.
pub(crate) fn tree_expectation(tree: &TreeNode) -> Vec<f64> {
    match tree {
        TreeNode::Leaf { value, .. } => value.clone(),
        TreeNode::Internal {
            cover, left, right, ..
        } => {
            let lv = tree_expectation(left);
            let rv = tree_expectation(right);
            let wl = left.cover() as f64 / *cover as f64;
            let wr = right.cover() as f64 / *cover as f64;
            lv.iter()
                .zip(&rv)
                .map(|(a, b)| wl * a + wr * b)
                .collect()
        }
    }
}

/// Tree output for a coalition: features whose bit is set in `mask` follow
/// the instance; absent features mix both children by cover share.
pub(crate) fn conditional_value(tree: &TreeNode, x: &[f64], mask: u32) -> Vec<f64> {
    match tree {
        TreeNode::Leaf { value, .. } => value.clone(),
        TreeNode::Internal {
            feature,
            threshold,
            cover,
            left,
            right,
        } => {
            if mask & (1 << *feature) != 0 {
                let next = if x[*feature] <= *threshold { left } else { right };
                conditional_value(next, x, mask)
            } else {
                let lv = conditional_value(left, x, mask);
                let rv = conditional_value(right, x, mask);
                let wl = left.cover() as f64 / *cover as f64;
                let wr = right.cover() as f64 / *cover as f64;
                lv.iter()
                    .zip(&rv)
                    .map(|(a, b)| wl * a + wr * b)
                    .collect()
            }
        }
    }
}

/// The value the tree assigns to `x` with every feature present.
pub(crate) fn full_value(tree: &TreeNode, x: &[f64]) -> Vec<f64> {
    match tree {
        TreeNode::Leaf { value, .. } => value.clone(),
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            if x[*feature] <= *threshold {
                full_value(left, x)
            } else {
                full_value(right, x)
            }
        }
    }
}
