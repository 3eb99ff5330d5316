//! Top-down hierarchical classification with one local forest per internal
//! node, trained to pick among that node's children.

use std::sync::Arc;

use super::forest::{argmax, fit_forest, Forest, ForestParams, Target};
use crate::error::{Error, Result};
use crate::hierarchy::{CategoryTree, NodeId, ROOT};
use crate::rng;

#[derive(Debug, Clone)]
enum LocalModel {
    Forest(Forest),
    /// Always choose the child at this position.
    Fixed(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitReport {
    /// Internal nodes without training rows; they predict their prior child.
    pub prior_only: Vec<NodeId>,
    /// Internal nodes whose rows all took the same child.
    pub single_child: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct TopDownClassifier {
    tree: Arc<CategoryTree>,
    models: Vec<Option<LocalModel>>,
    p: usize,
    pub report: FitReport,
}

/// Fit local models on row-major `x` with `p` columns. `leaves` are the
/// true leaf node ids of the rows.
pub fn fit_topdown(
    x: &[f64],
    p: usize,
    leaves: &[NodeId],
    tree: Arc<CategoryTree>,
    params: &ForestParams,
    seed: u64,
) -> Result<TopDownClassifier> {
    let n = leaves.len();
    if p == 0 || x.len() != n * p {
        return Err(Error::fit("feature matrix shape does not match the labels"));
    }
    if let Some(&bad) = leaves.iter().find(|&&l| l >= tree.len() || !tree.is_leaf(l)) {
        return Err(Error::fit(format!("label id {bad} is not a leaf of the tree")));
    }
    let paths: Vec<Vec<NodeId>> = leaves.iter().map(|&l| tree.augment(l).map(|a| a.nodes().to_vec())).collect::<Result<_>>()?;
    let mut models = vec![None; tree.len()];
    let mut report = FitReport::default();
    // rows reaching each node, filled top-down
    let mut rows_at: Vec<Vec<usize>> = vec![Vec::new(); tree.len()];
    rows_at[ROOT] = (0..n).collect();
    for v in std::iter::once(ROOT).chain(tree.class_nodes()) {
        let children = tree.children(v);
        if children.is_empty() {
            continue;
        }
        let depth = tree.depth(v);
        let rows = std::mem::take(&mut rows_at[v]);
        let taken: Vec<usize> = rows
            .iter()
            .map(|&i| children.iter().position(|&c| c == paths[i][depth]).expect("path passes through a child"))
            .collect();
        for (&i, &c) in rows.iter().zip(&taken) {
            rows_at[children[c]].push(i);
        }
        let mut counts = vec![0usize; children.len()];
        for &c in &taken {
            counts[c] += 1;
        }
        let model = if children.len() == 1 {
            LocalModel::Fixed(0)
        } else if rows.is_empty() {
            report.prior_only.push(v);
            LocalModel::Fixed(0)
        } else if counts.iter().filter(|&&c| c > 0).count() == 1 {
            report.single_child.push(v);
            LocalModel::Fixed(counts.iter().position(|&c| c > 0).unwrap())
        } else if rows.len() < 2 {
            LocalModel::Fixed(taken[0])
        } else {
            let sub: Vec<f64> = rows.iter().flat_map(|&i| x[i * p..(i + 1) * p].iter().copied()).collect();
            let target = Target::Class { labels: &taken, n_classes: children.len() };
            LocalModel::Forest(fit_forest(&sub, p, target, params, rng::derive(seed, &[v as u64]))?)
        };
        models[v] = Some(model);
    }
    Ok(TopDownClassifier { tree, models, p, report })
}

impl TopDownClassifier {
    pub fn tree(&self) -> &Arc<CategoryTree> {
        &self.tree
    }

    pub fn p(&self) -> usize {
        self.p
    }

    fn check(&self, x: &[f64]) -> Result<usize> {
        if !x.len().is_multiple_of(self.p) {
            return Err(Error::fit(format!("feature matrix does not have {} columns", self.p)));
        }
        Ok(x.len() / self.p)
    }

    /// Child probabilities of internal node `v` for every row of `x`,
    /// row-major over the children.
    fn local_proba(&self, v: NodeId, x: &[f64], n: usize) -> Result<Vec<f64>> {
        let k = self.tree.children(v).len();
        match self.models[v].as_ref().expect("internal node has a model") {
            LocalModel::Forest(f) => f.predict_proba(x),
            LocalModel::Fixed(c) => {
                let mut out = vec![0.0; n * k];
                for r in 0..n {
                    out[r * k + c] = 1.0;
                }
                Ok(out)
            }
        }
    }

    /// Greedy descent from the root, taking the most probable child (ties go
    /// to the child with the smaller canonical label).
    pub fn predict_leaves(&self, x: &[f64]) -> Result<Vec<NodeId>> {
        let n = self.check(x)?;
        let mut out = Vec::with_capacity(n);
        for row in x.chunks(self.p) {
            let mut v = ROOT;
            while !self.tree.children(v).is_empty() {
                let pick = match self.models[v].as_ref().expect("internal node has a model") {
                    LocalModel::Forest(f) => argmax(&f.predict_proba(row)?),
                    LocalModel::Fixed(c) => *c,
                };
                v = self.tree.children(v)[pick];
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Leaf probabilities, row-major `n x n_leaves` in the tree's leaf
    /// order; each is the product of local child probabilities along the
    /// root-to-leaf path.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.check(x)?;
        let m = self.tree.len();
        let mut mass = vec![0.0; n * m];
        for r in 0..n {
            mass[r * m + ROOT] = 1.0;
        }
        for v in std::iter::once(ROOT).chain(self.tree.class_nodes()) {
            let children = self.tree.children(v);
            if children.is_empty() {
                continue;
            }
            let local = self.local_proba(v, x, n)?;
            let k = children.len();
            for r in 0..n {
                let here = mass[r * m + v];
                for (j, &c) in children.iter().enumerate() {
                    mass[r * m + c] = here * local[r * k + j];
                }
            }
        }
        let leaves = self.tree.leaves();
        let mut out = Vec::with_capacity(n * leaves.len());
        for r in 0..n {
            out.extend(leaves.iter().map(|&l| mass[r * m + l]));
        }
        Ok(out)
    }
}
