//! Hierarchical classification measures over augmented labels.
//!
//! Truths and predictions are node ids of one category tree. Predictions
//! may stop at internal nodes; the root is never a valid class.

use super::{harmonic, Averaging, MetricResult, Prf};
use crate::error::{Error, Result};
use crate::hierarchy::{AugmentedLabel, CategoryTree, NodeId, ROOT};

fn augmented_pairs(tree: &CategoryTree, y: &[NodeId], yhat: &[NodeId]) -> Result<Vec<(AugmentedLabel, AugmentedLabel)>> {
    if y.len() != yhat.len() {
        return Err(Error::metric(format!("{} labels but {} predictions", y.len(), yhat.len())));
    }
    if y.is_empty() {
        return Err(Error::metric("no observations"));
    }
    y.iter()
        .zip(yhat)
        .map(|(&a, &b)| {
            if a == ROOT || b == ROOT {
                return Err(Error::metric("the root is not a class and cannot be a label or prediction"));
            }
            Ok((tree.augment(a)?, tree.augment(b)?))
        })
        .collect()
}

/// Precision, recall and F1 on ancestor-augmented label sets.
pub fn hier_prf(tree: &CategoryTree, y: &[NodeId], yhat: &[NodeId], averaging: Averaging) -> Result<Prf> {
    let pairs = augmented_pairs(tree, y, yhat)?;
    let (precision, recall) = match averaging {
        Averaging::Micro => {
            let (mut inter, mut pred, mut truth) = (0usize, 0usize, 0usize);
            for (a, b) in &pairs {
                inter += a.intersection_len(b);
                pred += b.len();
                truth += a.len();
            }
            (inter as f64 / pred as f64, inter as f64 / truth as f64)
        }
        Averaging::Macro => {
            let m = tree.len();
            let (mut tp, mut pred, mut truth) = (vec![0usize; m], vec![0usize; m], vec![0usize; m]);
            for (a, b) in &pairs {
                for &v in b.nodes() {
                    pred[v] += 1;
                }
                let shared = a.intersection_len(b);
                for (k, &v) in a.nodes().iter().enumerate() {
                    truth[v] += 1;
                    if k < shared {
                        tp[v] += 1;
                    }
                }
            }
            let mean = |den: &[usize]| {
                let vals: Vec<f64> = (0..m).filter(|&v| den[v] > 0).map(|v| tp[v] as f64 / den[v] as f64).collect();
                vals.iter().sum::<f64>() / vals.len() as f64
            };
            (mean(&pred), mean(&truth))
        }
    };
    Ok(Prf { precision, recall, f1: harmonic(precision, recall) })
}

/// Mean size of the symmetric difference of augmented labels.
pub fn sym_diff_loss(tree: &CategoryTree, y: &[NodeId], yhat: &[NodeId]) -> Result<MetricResult> {
    let pairs = augmented_pairs(tree, y, yhat)?;
    Ok(MetricResult::pointwise("sym_diff", pairs.iter().map(|(a, b)| a.sym_diff_len(b) as f64).collect()))
}

/// Default level weights and costs: 1, 1/2, 1/4, ... for levels 1..=len.
pub fn halving(len: usize) -> Vec<f64> {
    (0..len).map(|l| 0.5f64.powi(l as i32)).collect()
}

/// Mean weighted length of the tree path between truth and prediction. The
/// edge above a node at depth d carries `level_weights[d - 1]`; without
/// weights every edge counts 1.
pub fn shortest_path_loss(
    tree: &CategoryTree,
    y: &[NodeId],
    yhat: &[NodeId],
    level_weights: Option<&[f64]>,
) -> Result<MetricResult> {
    if let Some(w) = level_weights {
        if w.len() != tree.height() {
            return Err(Error::metric(format!("{} level weights for a tree of height {}", w.len(), tree.height())));
        }
        if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::metric("level weights must be positive"));
        }
        if w.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::metric("level weights must not increase with depth"));
        }
    }
    let pairs = augmented_pairs(tree, y, yhat)?;
    let weight = |v: NodeId| level_weights.map_or(1.0, |w| w[tree.depth(v) - 1]);
    let losses = pairs
        .iter()
        .map(|(a, b)| {
            let k = a.intersection_len(b);
            a.nodes()[k..].iter().chain(&b.nodes()[k..]).map(|&v| weight(v)).sum()
        })
        .collect();
    let name = if level_weights.is_some() { "weighted_shortest_path" } else { "shortest_path" };
    let mut r = MetricResult::pointwise(name, losses);
    if let Some(w) = level_weights {
        r = r.with_params(format!("weights={}", join(w)));
    }
    Ok(r)
}

pub(crate) fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";")
}

/// Charges `costs[l - 1]` at the first level l where the predicted path
/// leaves the true path; predictions that stop on the true path cost 0.
pub fn h_loss(tree: &CategoryTree, y: &[NodeId], yhat: &[NodeId], costs: &[f64]) -> Result<MetricResult> {
    if costs.is_empty() || costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::metric("H-loss costs must be positive"));
    }
    if costs.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::metric("H-loss costs must strictly decrease with depth"));
    }
    let pairs = augmented_pairs(tree, y, yhat)?;
    let mut losses = Vec::with_capacity(pairs.len());
    for (a, b) in &pairs {
        let k = a.intersection_len(b);
        if k == b.len() {
            losses.push(0.0);
        } else {
            let c = costs
                .get(k)
                .ok_or_else(|| Error::metric(format!("no H-loss cost for level {}", k + 1)))?;
            losses.push(*c);
        }
    }
    Ok(MetricResult::pointwise("h_loss", losses).with_params(format!("costs={}", join(costs))))
}

/// Probability mass of every node (root included) given leaf probabilities
/// in the tree's leaf order.
fn node_mass(tree: &CategoryTree, leaf_probs: &[f64]) -> Vec<f64> {
    let mut mass = vec![0.0; tree.len()];
    for (&l, &p) in tree.leaves().iter().zip(leaf_probs) {
        let mut v = l;
        loop {
            mass[v] += p;
            match tree.parent(v) {
                Some(u) => v = u,
                None => break,
            }
        }
    }
    mass
}

/// Win score: walking down the true path, the m-th node (m = 1 below the
/// root) earns `0.5^m * p(node)` while it is the most probable child of its
/// parent (ties to the smaller canonical label). A fully correct path earns
/// the leaf term twice.
pub fn win_score(tree: &CategoryTree, y: &[NodeId], leaf_probs: &[f64]) -> Result<MetricResult> {
    let k = tree.leaves().len();
    if y.is_empty() {
        return Err(Error::metric("no observations"));
    }
    if leaf_probs.len() != y.len() * k {
        return Err(Error::metric(format!(
            "leaf probability matrix has {} entries, expected {} rows x {k} leaves",
            leaf_probs.len(),
            y.len()
        )));
    }
    let mut scores = Vec::with_capacity(y.len());
    for (&leaf, row) in y.iter().zip(leaf_probs.chunks(k)) {
        if !tree.is_leaf(leaf) {
            return Err(Error::metric(format!("true label {} is not a leaf", tree.label(leaf))));
        }
        if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::metric("leaf probabilities must form a distribution per row"));
        }
        let mass = node_mass(tree, row);
        let path = tree.augment(leaf)?;
        let mut score = 0.0;
        let mut all_correct = true;
        for (m, &v) in path.nodes().iter().enumerate() {
            let parent = tree.parent(v).expect("class node has a parent");
            let best = tree
                .children(parent)
                .iter()
                .copied()
                .fold(None, |acc: Option<NodeId>, c| match acc {
                    Some(b) if mass[b] >= mass[c] => Some(b),
                    _ => Some(c),
                })
                .unwrap();
            if best != v {
                all_correct = false;
                break;
            }
            score += 0.5f64.powi(m as i32 + 1) * mass[v];
        }
        if all_correct {
            score += 0.5f64.powi(path.len() as i32) * mass[leaf];
        }
        scores.push(score);
    }
    Ok(MetricResult::pointwise("win", scores))
}
