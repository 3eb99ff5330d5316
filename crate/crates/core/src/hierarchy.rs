//! Category trees over dotted class labels ("2", "2.2", "2.2.1", ...).
//!
//! The root is a synthetic node without a class; it never appears in an
//! augmented label. Children of the root have depth 1.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Index of the synthetic root in every tree.
pub const ROOT: NodeId = 0;

#[derive(Debug, Clone, PartialEq)]
struct Node {
    label: String,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryTree {
    nodes: Vec<Node>,
    index: HashMap<String, NodeId>,
    leaves: Vec<NodeId>,
    leaf_pos: Vec<Option<usize>>,
    height: usize,
}

/// Orders dotted labels segment by segment, numerically where both segments
/// are integers.
pub fn canonical_cmp(a: &str, b: &str) -> Ordering {
    let mut sa = a.split('.');
    let mut sb = b.split('.');
    loop {
        match (sa.next(), sb.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) => {
                let ord = match (x.parse::<u64>(), y.parse::<u64>()) {
                    (Ok(p), Ok(q)) => p.cmp(&q).then_with(|| x.cmp(y)),
                    _ => x.cmp(y),
                };
                if ord != Ordering::Equal {
                    return ord;
                }
            }
        }
    }
}

impl CategoryTree {
    /// Builds the prefix closure of a list of leaf labels.
    ///
    /// A listed label that is also a proper prefix of another listed label
    /// is rejected, since the list declares leaves.
    pub fn from_leaf_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Hierarchy("no labels given".into()));
        }
        let mut declared: Vec<&str> = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref().trim();
            if l.is_empty() || l.split('.').any(|s| s.is_empty()) {
                return Err(Error::Hierarchy(format!("malformed label {l:?}")));
            }
            declared.push(l);
        }
        declared.sort_by(|a, b| canonical_cmp(a, b));
        declared.dedup();

        let mut all: Vec<String> = Vec::new();
        let mut seen: HashMap<String, ()> = HashMap::new();
        for l in &declared {
            let segs: Vec<&str> = l.split('.').collect();
            for d in 1..=segs.len() {
                let prefix = segs[..d].join(".");
                if d < segs.len() && declared.binary_search_by(|x| canonical_cmp(x, &prefix)).is_ok() {
                    return Err(Error::Hierarchy(format!(
                        "label {prefix:?} is declared as a leaf but is an ancestor of {l:?}"
                    )));
                }
                if seen.insert(prefix.clone(), ()).is_none() {
                    all.push(prefix);
                }
            }
        }
        // parents sort before children under canonical order
        all.sort_by(|a, b| canonical_cmp(a, b));

        let mut nodes = vec![Node { label: String::new(), parent: None, children: Vec::new(), depth: 0 }];
        let mut index = HashMap::with_capacity(all.len());
        for label in all {
            let parent = match label.rfind('.') {
                Some(p) => index[&label[..p]],
                None => ROOT,
            };
            let id = nodes.len();
            let depth = nodes[parent].depth + 1;
            nodes.push(Node { label: label.clone(), parent: Some(parent), children: Vec::new(), depth });
            nodes[parent].children.push(id);
            index.insert(label, id);
        }
        for id in 0..nodes.len() {
            let mut ch = std::mem::take(&mut nodes[id].children);
            ch.sort_by(|&a, &b| canonical_cmp(&nodes[a].label, &nodes[b].label));
            nodes[id].children = ch;
        }
        let mut leaves: Vec<NodeId> = (1..nodes.len()).filter(|&i| nodes[i].children.is_empty()).collect();
        leaves.sort_by(|&a, &b| canonical_cmp(&nodes[a].label, &nodes[b].label));
        let mut leaf_pos = vec![None; nodes.len()];
        for (pos, &l) in leaves.iter().enumerate() {
            leaf_pos[l] = Some(pos);
        }
        let height = nodes.iter().map(|n| n.depth).max().unwrap_or(0);
        Ok(CategoryTree { nodes, index, leaves, leaf_pos, height })
    }

    /// Reads a tree file: newline-separated leaf labels, blank lines and
    /// `#` comments ignored.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let labels: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self::from_leaf_labels(&labels)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    /// Number of nodes including the root.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }

    pub fn node(&self, label: &str) -> Result<NodeId> {
        self.index
            .get(label.trim())
            .copied()
            .ok_or_else(|| Error::Hierarchy(format!("unknown node {label:?}")))
    }

    fn check(&self, id: NodeId) -> Result<()> {
        if id < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::Hierarchy(format!("unknown node id {id}")))
        }
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id].label
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    /// Children in canonical label order.
    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.nodes[id].depth
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        id != ROOT && self.nodes[id].children.is_empty()
    }

    /// Leaves in canonical label order.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    /// Position of a leaf in [`leaves`](Self::leaves).
    pub fn leaf_index(&self, id: NodeId) -> Option<usize> {
        self.leaf_pos.get(id).copied().flatten()
    }

    /// Nodes with at least one child, root included.
    pub fn internal_nodes(&self) -> Vec<NodeId> {
        (0..self.nodes.len()).filter(|&i| !self.nodes[i].children.is_empty()).collect()
    }

    /// Depth of the deepest node.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Class nodes (root excluded), parents before children.
    pub fn class_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        1..self.nodes.len()
    }

    /// The node and its ancestors, root excluded, ordered from depth 1 down.
    pub fn augment(&self, id: NodeId) -> Result<AugmentedLabel> {
        self.check(id)?;
        if id == ROOT {
            return Err(Error::Hierarchy("the root has no augmented label".into()));
        }
        let mut path = Vec::with_capacity(self.nodes[id].depth);
        let mut cur = id;
        while cur != ROOT {
            path.push(cur);
            cur = self.nodes[cur].parent.expect("non-root node has a parent");
        }
        path.reverse();
        Ok(AugmentedLabel(path))
    }

    pub fn lca(&self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check(a)?;
        self.check(b)?;
        let (mut a, mut b) = (a, b);
        while self.nodes[a].depth > self.nodes[b].depth {
            a = self.nodes[a].parent.unwrap();
        }
        while self.nodes[b].depth > self.nodes[a].depth {
            b = self.nodes[b].parent.unwrap();
        }
        while a != b {
            a = self.nodes[a].parent.unwrap();
            b = self.nodes[b].parent.unwrap();
        }
        Ok(a)
    }

    /// Edges on the tree path between two nodes; paths across top-level
    /// branches pass through the root.
    pub fn path_edges(&self, a: NodeId, b: NodeId) -> Result<usize> {
        let c = self.lca(a, b)?;
        Ok(self.nodes[a].depth + self.nodes[b].depth - 2 * self.nodes[c].depth)
    }

    /// Leaves in the subtree of `id` (the node itself if it is a leaf).
    pub fn descendant_leaves(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            if self.nodes[v].children.is_empty() {
                if v != ROOT {
                    out.push(v);
                }
            } else {
                stack.extend(self.nodes[v].children.iter().rev());
            }
        }
        out
    }
}

impl fmt::Display for CategoryTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.leaves {
            writeln!(f, "{}", self.nodes[l].label)?;
        }
        Ok(())
    }
}

/// A class together with all its ancestors (root excluded), top-down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedLabel(Vec<NodeId>);

impl AugmentedLabel {
    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.0.contains(&id)
    }

    /// Node at level `l` (1-based), if the label reaches that deep.
    pub fn at_level(&self, l: usize) -> Option<NodeId> {
        l.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    /// |self ∩ other|. Both are root paths, so the intersection is their
    /// common prefix.
    pub fn intersection_len(&self, other: &AugmentedLabel) -> usize {
        self.0.iter().zip(&other.0).take_while(|(a, b)| a == b).count()
    }

    /// |self △ other|.
    pub fn sym_diff_len(&self, other: &AugmentedLabel) -> usize {
        self.len() + other.len() - 2 * self.intersection_len(other)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn figure6() -> CategoryTree {
        CategoryTree::from_leaf_labels(&["1", "2.1", "2.2.1", "2.2.2", "2.3", "3.1", "3.2"]).unwrap()
    }

    fn labels(t: &CategoryTree, a: &AugmentedLabel) -> Vec<String> {
        a.nodes().iter().map(|&i| t.label(i).to_string()).collect()
    }

    #[test]
    fn figure6_shape() {
        let t = figure6();
        assert_eq!(t.leaves().len(), 7);
        let mut internal: Vec<&str> =
            t.internal_nodes().into_iter().filter(|&i| i != ROOT).map(|i| t.label(i)).collect();
        internal.sort();
        assert_eq!(internal, vec!["2", "2.2", "3"]);
        assert_eq!(t.height(), 3);
        let root_children: Vec<&str> = t.children(ROOT).iter().map(|&i| t.label(i)).collect();
        assert_eq!(root_children, vec!["1", "2", "3"]);
    }

    #[test]
    fn single_leaf_tree() {
        let t = CategoryTree::from_leaf_labels(&["a"]).unwrap();
        let a = t.node("a").unwrap();
        assert!(t.is_leaf(a));
        assert_eq!(t.depth(a), 1);
        assert_eq!(t.leaves(), &[a]);
    }

    #[test]
    fn leaf_declared_as_ancestor_is_rejected() {
        assert!(CategoryTree::from_leaf_labels(&["2", "2.1"]).is_err());
        assert!(CategoryTree::from_leaf_labels(&["2..1"]).is_err());
        assert!(CategoryTree::from_leaf_labels::<&str>(&[]).is_err());
    }

    #[test]
    fn augment_examples() {
        let t = figure6();
        let a = t.augment(t.node("2.2.1").unwrap()).unwrap();
        assert_eq!(labels(&t, &a), vec!["2", "2.2", "2.2.1"]);
        let b = t.augment(t.node("1").unwrap()).unwrap();
        assert_eq!(labels(&t, &b), vec!["1"]);
        for id in t.class_nodes() {
            assert_eq!(t.augment(id).unwrap().len(), t.depth(id));
        }
        assert!(t.augment(ROOT).is_err());
        assert!(t.augment(999).is_err());
    }

    #[test]
    fn path_edge_examples() {
        let t = figure6();
        let n = |s| t.node(s).unwrap();
        assert_eq!(t.path_edges(n("2.2.1"), n("2.2.2")).unwrap(), 2);
        assert_eq!(t.path_edges(n("2.2.1"), n("2.2.1")).unwrap(), 0);
        assert_eq!(t.path_edges(n("2.2.1"), n("1")).unwrap(), 4);
        assert!(t.path_edges(n("1"), 77).is_err());
        assert!(t.node("4").is_err());
    }

    #[test]
    fn path_edges_equals_symmetric_difference_on_figure6() {
        let t = figure6();
        for a in t.class_nodes() {
            for b in t.class_nodes() {
                let sd = t.augment(a).unwrap().sym_diff_len(&t.augment(b).unwrap());
                assert_eq!(t.path_edges(a, b).unwrap(), sd);
            }
        }
    }

    #[test]
    fn deepest_leaf_augment_is_height() {
        let t = figure6();
        let deepest = t.leaves().iter().copied().max_by_key(|&l| t.depth(l)).unwrap();
        assert_eq!(t.augment(deepest).unwrap().len(), t.height());
    }

    #[test]
    fn canonical_order_is_numeric_per_segment() {
        assert_eq!(canonical_cmp("2.10", "2.9"), Ordering::Greater);
        assert_eq!(canonical_cmp("2", "2.1"), Ordering::Less);
        assert_eq!(canonical_cmp("b", "a"), Ordering::Greater);
    }

    #[test]
    fn text_round_trip() {
        let t = figure6();
        let back = CategoryTree::parse(&t.to_string()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn descendant_leaves_of_internal_node() {
        let t = figure6();
        let got: Vec<&str> = t.descendant_leaves(t.node("2").unwrap()).iter().map(|&i| t.label(i)).collect();
        assert_eq!(got, vec!["2.1", "2.2.1", "2.2.2", "2.3"]);
        assert_eq!(t.descendant_leaves(ROOT).len(), 7);
    }
}
