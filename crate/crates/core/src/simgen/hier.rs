//! Random category trees and multinomial-logit descent down them.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::hierarchy::{CategoryTree, NodeId, ROOT};
use crate::rng::{self, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HierConfig {
    pub n_leaves: usize,
    /// Internal nodes, root included.
    pub internal_nodes: usize,
    pub p: usize,
    /// Coefficient standard deviation at the top level.
    pub base_scale: f64,
    /// Per-level shrinkage of the coefficient standard deviation.
    pub effect_decay: f64,
    pub n_train: usize,
}

impl Default for HierConfig {
    fn default() -> Self {
        HierConfig { n_leaves: 50, internal_nodes: 39, p: 5, base_scale: 3.0, effect_decay: 0.5, n_train: 1000 }
    }
}

impl HierConfig {
    /// Number of internal nodes with two and with three children.
    pub fn arity_counts(&self) -> Result<(usize, usize)> {
        let (l, i) = (self.n_leaves as i64, self.internal_nodes as i64);
        let three = l - i - 1;
        let two = 2 * i - l + 1;
        if i < 1 || three < 0 || two < 0 {
            return Err(Error::Simulation(format!(
                "no tree with {l} leaves and {i} internal nodes of arity 2 or 3"
            )));
        }
        Ok((two as usize, three as usize))
    }

    pub fn validate(&self) -> Result<()> {
        self.arity_counts()?;
        if self.p == 0 {
            return Err(Error::Simulation("need at least one feature".into()));
        }
        if !(self.effect_decay > 0.0 && self.effect_decay < 1.0) {
            return Err(Error::Simulation(format!("effect decay {} must lie in (0, 1)", self.effect_decay)));
        }
        if !(self.base_scale.is_finite() && self.base_scale >= 0.0) {
            return Err(Error::Simulation("base scale must be non-negative".into()));
        }
        Ok(())
    }
}

/// Random tree with the configured leaf and internal node counts: the
/// shuffled list of arities is consumed by repeatedly expanding a uniformly
/// chosen current leaf. Children of node `a.b` are labelled `a.b.1`, ...
pub fn generate_tree(cfg: &HierConfig, seed: u64) -> Result<CategoryTree> {
    let (two, three) = cfg.arity_counts()?;
    let mut r = rng::rng(seed);
    let mut arities: Vec<usize> = std::iter::repeat_n(2, two).chain(std::iter::repeat_n(3, three)).collect();
    arities.shuffle(&mut r);
    // frontier of current leaves as label paths; the root is the empty path
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for a in arities {
        let pick = r.random_range(0..frontier.len());
        let node = frontier.swap_remove(pick);
        for c in 1..=a {
            let mut child = node.clone();
            child.push(c);
            frontier.push(child);
        }
    }
    let labels: Vec<String> = frontier
        .iter()
        .map(|p| p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("."))
        .collect();
    CategoryTree::from_leaf_labels(&labels)
}

/// Tree plus per-node child coefficient vectors; fixed for a study, while
/// data sets are drawn per replicate.
#[derive(Debug, Clone)]
pub struct HierModel {
    tree: Arc<CategoryTree>,
    p: usize,
    /// For each internal node, row-major `children x p` coefficients.
    coef: Vec<Vec<f64>>,
}

impl HierModel {
    /// Coefficients for the choice among the children of a node at depth
    /// d - 1 are Normal(0, s_d^2) with s_d = base_scale * decay^(d - 1).
    pub fn new(tree: Arc<CategoryTree>, cfg: &HierConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut r = rng::rng(seed);
        let mut coef = vec![Vec::new(); tree.len()];
        for v in std::iter::once(ROOT).chain(tree.class_nodes()) {
            let k = tree.children(v).len();
            if k == 0 {
                continue;
            }
            let sd = cfg.base_scale * cfg.effect_decay.powi(tree.depth(v) as i32);
            let dist = Normal::new(0.0, sd).map_err(|e| Error::Simulation(e.to_string()))?;
            coef[v] = (0..k * cfg.p).map(|_| dist.sample(&mut r)).collect();
        }
        Ok(HierModel { tree, p: cfg.p, coef })
    }

    /// Tree and model from one study seed.
    pub fn generate(cfg: &HierConfig, seed: u64) -> Result<Self> {
        let tree = Arc::new(generate_tree(cfg, rng::derive(seed, &[0]))?);
        HierModel::new(tree, cfg, rng::derive(seed, &[1]))
    }

    pub fn tree(&self) -> &Arc<CategoryTree> {
        &self.tree
    }

    /// Softmax child probabilities at internal node `v` for features `x`.
    pub fn child_probs(&self, v: NodeId, x: &[f64]) -> Vec<f64> {
        let eta: Vec<f64> = self.coef[v].chunks(self.p).map(|b| b.iter().zip(x).map(|(a, c)| a * c).sum()).collect();
        let m = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = eta.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    fn descend(&self, x: &[f64], r: &mut SimRng) -> NodeId {
        let mut v = ROOT;
        while !self.tree.children(v).is_empty() {
            let probs = self.child_probs(v, x);
            let u: f64 = r.random();
            let mut acc = 0.0;
            let mut pick = probs.len() - 1;
            for (j, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = j;
                    break;
                }
            }
            v = self.tree.children(v)[pick];
        }
        v
    }

    /// `n` rows of standard-normal features, each dropped down the tree.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::Simulation("sample size must be positive".into()));
        }
        let mut r = rng::rng(seed);
        let mut x = Vec::with_capacity(n * self.p);
        let mut leaves = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..self.p).map(|_| StandardNormal.sample(&mut r)).collect();
            leaves.push(self.descend(&row, &mut r));
            x.extend(row);
        }
        let names = (1..=self.p).map(|j| format!("x{j}")).collect();
        Dataset::new(names, x, Label::Hier { leaves, tree: Arc::clone(&self.tree) })
    }
}

/// Convenience wrapper: `n_train` rows from a model.
pub fn gen_hier_data(model: &HierModel, cfg: &HierConfig, seed: u64) -> Result<Dataset> {
    model.sample(cfg.n_train, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tree_counts() {
        let cfg = HierConfig::default();
        for seed in 0..5 {
            let t = generate_tree(&cfg, seed).unwrap();
            assert_eq!(t.leaves().len(), 50);
            let internal = t.internal_nodes();
            assert_eq!(internal.len(), 39);
            assert!(internal.iter().all(|&v| (2..=3).contains(&t.children(v).len())));
            let edges: usize = internal.iter().map(|&v| t.children(v).len()).sum();
            assert_eq!(edges, t.len() - 1);
        }
        assert_eq!(generate_tree(&cfg, 3).unwrap(), generate_tree(&cfg, 3).unwrap());
    }

    #[test]
    fn smallest_tree_and_infeasible_counts() {
        let cfg = HierConfig { n_leaves: 2, internal_nodes: 1, ..Default::default() };
        let t = generate_tree(&cfg, 0).unwrap();
        assert_eq!(t.children(ROOT).len(), 2);
        assert!(t.children(ROOT).iter().all(|&c| t.is_leaf(c)));
        assert!(generate_tree(&HierConfig { n_leaves: 10, internal_nodes: 2, ..Default::default() }, 0).is_err());
        assert!(generate_tree(&HierConfig { n_leaves: 3, internal_nodes: 3, ..Default::default() }, 0).is_err());
    }

    #[test]
    fn samples_end_at_leaves() {
        let cfg = HierConfig::default();
        let m = HierModel::generate(&cfg, 7).unwrap();
        let d = m.sample(300, 1).unwrap();
        let (leaves, tree) = d.hier_labels().unwrap();
        assert!(leaves.iter().all(|&l| tree.is_leaf(l)));
        assert_eq!(d.p(), 5);
    }
}
