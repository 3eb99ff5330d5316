//! CART random forests for regression and classification.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; task default when `None`.
    pub mtry: Option<usize>,
    /// Minimum number of rows in each child; task default when `None`.
    pub min_node_size: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 500, mtry: None, min_node_size: None, bootstrap: true }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Real(&'a [f64]),
    Class { labels: &'a [usize], n_classes: usize },
}

impl Target<'_> {
    fn len(&self) -> usize {
        match self {
            Target::Real(y) => y.len(),
            Target::Class { labels, .. } => labels.len(),
        }
    }

    /// Width of a leaf value: 1 for regression, class count otherwise.
    fn width(&self) -> usize {
        match self {
            Target::Real(_) => 1,
            Target::Class { n_classes, .. } => *n_classes,
        }
    }
}

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    feature: u32,
    threshold: f64,
    /// Left child index, or offset into `values` for leaves.
    left: u32,
    right: u32,
}

#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<Node>,
    values: Vec<f64>,
}

impl Tree {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == LEAF).count()
    }

    fn leaf_value(&self, x: &[f64], width: usize) -> &[f64] {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.feature == LEAF {
                let o = n.left as usize;
                return &self.values[o..o + width];
            }
            i = if x[n.feature as usize] <= n.threshold { n.left } else { n.right } as usize;
        }
    }
}

#[derive(Debug, Clone)]
pub struct Forest {
    trees: Vec<Tree>,
    p: usize,
    /// 0 for regression.
    n_classes: usize,
    pub mtry: usize,
    pub min_node_size: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

struct Grower<'a> {
    xcol: &'a [f64],
    n: usize,
    p: usize,
    target: Target<'a>,
    mtry: usize,
    min_node: usize,
}

struct Best {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Grower<'_> {
    fn x(&self, j: usize, i: usize) -> f64 {
        self.xcol[j * self.n + i]
    }

    fn leaf_value(&self, rows: &[usize], out: &mut Vec<f64>) {
        match self.target {
            Target::Real(y) => out.push(rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64),
            Target::Class { labels, n_classes } => {
                let start = out.len();
                out.resize(start + n_classes, 0.0);
                for &i in rows {
                    out[start + labels[i]] += 1.0;
                }
                for v in &mut out[start..] {
                    *v /= rows.len() as f64;
                }
            }
        }
    }

    /// Parent score and whether the node is pure.
    fn node_score(&self, rows: &[usize]) -> (f64, bool) {
        let m = rows.len() as f64;
        match self.target {
            Target::Real(y) => {
                let s: f64 = rows.iter().map(|&i| y[i]).sum();
                let first = y[rows[0]];
                (s * s / m, rows.iter().all(|&i| y[i] == first))
            }
            Target::Class { labels, n_classes } => {
                let mut c = vec![0.0; n_classes];
                for &i in rows {
                    c[labels[i]] += 1.0;
                }
                let first = labels[rows[0]];
                (c.iter().map(|v| v * v).sum::<f64>() / m, rows.iter().all(|&i| labels[i] == first))
            }
        }
    }

    /// Best split on feature `j`, maximizing sum over children of
    /// (sum y)^2 / n (regression) or sum_c count^2 / n (Gini).
    fn best_on_feature(&self, j: usize, rows: &[usize], buf: &mut Vec<(f64, usize)>, counts: &mut [f64]) -> Option<Best> {
        buf.clear();
        buf.extend(rows.iter().map(|&i| (self.x(j, i), i)));
        buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let m = buf.len();
        if buf[0].0 == buf[m - 1].0 {
            return None;
        }
        let mut best: Option<Best> = None;
        let mut consider = |pos: usize, score: f64| {
            if best.as_ref().is_none_or(|b| score > b.score) {
                let (lo, hi) = (buf[pos].0, buf[pos + 1].0);
                let mut t = lo + (hi - lo) / 2.0;
                if t >= hi {
                    t = lo;
                }
                best = Some(Best { feature: j, threshold: t, score });
            }
        };
        match self.target {
            Target::Real(y) => {
                let total: f64 = buf.iter().map(|&(_, i)| y[i]).sum();
                let mut left = 0.0;
                for pos in 0..m - 1 {
                    left += y[buf[pos].1];
                    let nl = pos + 1;
                    if nl < self.min_node || m - nl < self.min_node || buf[pos].0 == buf[pos + 1].0 {
                        continue;
                    }
                    let right = total - left;
                    consider(pos, left * left / nl as f64 + right * right / (m - nl) as f64);
                }
            }
            Target::Class { labels, .. } => {
                counts.iter_mut().for_each(|c| *c = 0.0);
                for &(_, i) in buf.iter() {
                    counts[labels[i]] += 1.0;
                }
                let mut right_counts = counts.to_vec();
                let mut left_counts = vec![0.0; counts.len()];
                let mut sl = 0.0;
                let mut sr: f64 = right_counts.iter().map(|v| v * v).sum();
                for pos in 0..m - 1 {
                    let c = labels[buf[pos].1];
                    sl += 2.0 * left_counts[c] + 1.0;
                    left_counts[c] += 1.0;
                    sr -= 2.0 * right_counts[c] - 1.0;
                    right_counts[c] -= 1.0;
                    let nl = pos + 1;
                    if nl < self.min_node || m - nl < self.min_node || buf[pos].0 == buf[pos + 1].0 {
                        continue;
                    }
                    consider(pos, sl / nl as f64 + sr / (m - nl) as f64);
                }
            }
        }
        best
    }

    fn grow(&self, mut rows: Vec<usize>, rng: &mut SimRng) -> Tree {
        let width = self.target.width();
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        let mut buf = Vec::with_capacity(rows.len());
        let mut counts = vec![0.0; width];
        // (node index, start, end) into `rows`
        let mut stack = vec![(0usize, 0usize, rows.len())];
        nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0 });
        while let Some((id, start, end)) = stack.pop() {
            let here = &rows[start..end];
            let (parent, pure) = self.node_score(here);
            let mut best: Option<Best> = None;
            if !pure && here.len() >= 2 * self.min_node {
                for j in index::sample(rng, self.p, self.mtry) {
                    if let Some(b) = self.best_on_feature(j, here, &mut buf, &mut counts) {
                        if best.as_ref().is_none_or(|c| b.score > c.score) {
                            best = Some(b);
                        }
                    }
                }
            }
            match best {
                Some(b) if b.score > parent * (1.0 + 1e-12) => {
                    let part = &mut rows[start..end];
                    let mut mid = 0;
                    for k in 0..part.len() {
                        if self.x(b.feature, part[k]) <= b.threshold {
                            part.swap(k, mid);
                            mid += 1;
                        }
                    }
                    let l = nodes.len();
                    nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0 });
                    nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0 });
                    nodes[id] = Node { feature: b.feature as u32, threshold: b.threshold, left: l as u32, right: l as u32 + 1 };
                    stack.push((l + 1, start + mid, end));
                    stack.push((l, start, start + mid));
                }
                _ => {
                    nodes[id].left = values.len() as u32;
                    self.leaf_value(here, &mut values);
                }
            }
        }
        Tree { nodes, values }
    }
}

/// Fit a forest on row-major `x` with `p` columns.
///
/// Tree `t` draws from its own stream derived from `(seed, t)`, so the fit
/// does not depend on how trees are scheduled across threads.
pub fn fit_forest(x: &[f64], p: usize, target: Target, params: &ForestParams, seed: u64) -> Result<Forest> {
    let n = target.len();
    if p == 0 || x.len() != n * p {
        return Err(Error::fit("feature matrix shape does not match the labels"));
    }
    if n < 2 {
        return Err(Error::fit(format!("a forest needs at least 2 rows, got {n}")));
    }
    if params.n_trees == 0 {
        return Err(Error::fit("n_trees must be at least 1"));
    }
    let (n_classes, default_mtry, default_min) = match target {
        Target::Real(y) => {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::fit("non-finite regression label"));
            }
            (0, (p / 3).max(1), 5)
        }
        Target::Class { labels, n_classes } => {
            if n_classes == 0 || labels.iter().any(|&c| c >= n_classes) {
                return Err(Error::fit("class label out of range"));
            }
            (n_classes, ((p as f64).sqrt().floor() as usize).max(1), 1)
        }
    };
    let mtry = params.mtry.unwrap_or(default_mtry);
    if mtry == 0 || mtry > p {
        return Err(Error::fit(format!("mtry = {mtry} must lie in 1..={p}")));
    }
    let min_node_size = params.min_node_size.unwrap_or(default_min);
    if min_node_size == 0 {
        return Err(Error::fit("min_node_size must be at least 1"));
    }
    let mut xcol = vec![0.0; n * p];
    for i in 0..n {
        for j in 0..p {
            xcol[j * n + i] = x[i * p + j];
        }
    }
    let grower = Grower { xcol: &xcol, n, p, target, mtry, min_node: min_node_size };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::child_rng(seed, &[t as u64]);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grower.grow(rows, &mut rng)
        })
        .collect();
    Ok(Forest { trees, p, n_classes, mtry, min_node_size, bootstrap: params.bootstrap, seed })
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_classifier(&self) -> bool {
        self.n_classes > 0
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn check(&self, x: &[f64]) -> Result<usize> {
        if !x.len().is_multiple_of(self.p) {
            return Err(Error::fit(format!("feature matrix does not have {} columns", self.p)));
        }
        Ok(x.len() / self.p)
    }

    /// Mean of tree predictions for each row.
    pub fn predict_real(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.is_classifier() {
            return Err(Error::fit("regression prediction requested from a classification forest"));
        }
        self.check(x)?;
        let k = self.trees.len() as f64;
        Ok(x
            .chunks(self.p)
            .map(|r| self.trees.iter().map(|t| t.leaf_value(r, 1)[0]).sum::<f64>() / k)
            .collect())
    }

    /// Averaged leaf class proportions, row-major `n x n_classes`, each row
    /// renormalized to sum to one.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.is_classifier() {
            return Err(Error::fit("class probabilities requested from a regression forest"));
        }
        let n = self.check(x)?;
        let c = self.n_classes;
        let mut out = vec![0.0; n * c];
        for (r, row) in x.chunks(self.p).enumerate() {
            let acc = &mut out[r * c..(r + 1) * c];
            for t in &self.trees {
                for (a, v) in acc.iter_mut().zip(t.leaf_value(row, c)) {
                    *a += v;
                }
            }
            let s: f64 = acc.iter().sum();
            acc.iter_mut().for_each(|a| *a /= s);
        }
        Ok(out)
    }
}

/// Index of the largest entry; the smallest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
