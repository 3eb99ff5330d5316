//! Built-in learners: least squares, random forests and a top-down
//! hierarchical classifier.

pub mod forest;
pub mod ols;
pub mod topdown;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use forest::{fit_forest, Forest, ForestParams, Target};
pub use ols::{fit_ols, LinearModel};
pub use topdown::{fit_topdown, FitReport, TopDownClassifier};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::hierarchy::{CategoryTree, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LearnerSpec {
    Ols,
    Forest(ForestParams),
    Topdown(ForestParams),
}

impl LearnerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::Ols => "ols",
            LearnerSpec::Forest(_) => "forest",
            LearnerSpec::Topdown(_) => "topdown",
        }
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerSpec::Ols => f.write_str("ols"),
            LearnerSpec::Forest(p) | LearnerSpec::Topdown(p) => {
                write!(f, "{}:n_trees={}", self.name(), p.n_trees)?;
                if let Some(m) = p.mtry {
                    write!(f, ",mtry={m}")?;
                }
                if let Some(m) = p.min_node_size {
                    write!(f, ",min_node_size={m}")?;
                }
                if !p.bootstrap {
                    f.write_str(",bootstrap=false")?;
                }
                Ok(())
            }
        }
    }
}

/// `ols`, `forest`, `topdown`, optionally followed by
/// `:key=value,...` with keys n_trees, mtry, min_node_size, bootstrap.
impl FromStr for LearnerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = ForestParams::default();
        for kv in rest.split(',').filter(|t| !t.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got {kv:?}")))?;
            let bad = || Error::Config(format!("invalid value {v:?} for {k}"));
            match k.trim() {
                "n_trees" => params.n_trees = v.trim().parse().map_err(|_| bad())?,
                "mtry" => params.mtry = Some(v.trim().parse().map_err(|_| bad())?),
                "min_node_size" => params.min_node_size = Some(v.trim().parse().map_err(|_| bad())?),
                "bootstrap" => params.bootstrap = v.trim().parse().map_err(|_| bad())?,
                other => return Err(Error::Config(format!("unknown learner parameter {other:?}"))),
            }
        }
        match family.trim() {
            "ols" if rest.is_empty() => Ok(LearnerSpec::Ols),
            "ols" => Err(Error::Config("ols takes no parameters".into())),
            "forest" => Ok(LearnerSpec::Forest(params)),
            "topdown" => Ok(LearnerSpec::Topdown(params)),
            other => Err(Error::Config(format!("unknown learner {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Model {
    Linear(LinearModel),
    Forest(Forest),
    TopDown(TopDownClassifier),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Real(Vec<f64>),
    /// Row-major `n x n_classes` probabilities with their argmax classes.
    Class { probs: Vec<f64>, n_classes: usize, labels: Vec<usize> },
    /// Predicted leaves; leaf probabilities (row-major over the tree's
    /// leaves) when requested.
    Hier { leaves: Vec<NodeId>, leaf_probs: Option<Vec<f64>>, tree: Arc<CategoryTree> },
}

impl Prediction {
    pub fn len(&self) -> usize {
        match self {
            Prediction::Real(v) => v.len(),
            Prediction::Class { labels, .. } => labels.len(),
            Prediction::Hier { leaves, .. } => leaves.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fit a learner to a dataset. The label kind must suit the learner:
/// OLS needs real labels, forests real or class labels, top-down
/// hierarchical labels.
pub fn fit(spec: &LearnerSpec, d: &Dataset, seed: u64) -> Result<Model> {
    match (spec, d.label()) {
        (LearnerSpec::Ols, Label::Real(y)) => Ok(Model::Linear(fit_ols(d.features(), d.p(), y)?)),
        (LearnerSpec::Forest(p), Label::Real(y)) => Ok(Model::Forest(fit_forest(d.features(), d.p(), Target::Real(y), p, seed)?)),
        (LearnerSpec::Forest(p), Label::Class(c)) => {
            let n_classes = c.iter().max().map_or(1, |m| m + 1);
            let target = Target::Class { labels: c, n_classes };
            Ok(Model::Forest(fit_forest(d.features(), d.p(), target, p, seed)?))
        }
        (LearnerSpec::Topdown(p), Label::Hier { leaves, tree }) => {
            Ok(Model::TopDown(fit_topdown(d.features(), d.p(), leaves, Arc::clone(tree), p, seed)?))
        }
        (spec, label) => Err(Error::fit(format!("learner {} cannot fit {:?} labels", spec.name(), label.kind()))),
    }
}

impl Model {
    pub fn p(&self) -> usize {
        match self {
            Model::Linear(m) => m.p(),
            Model::Forest(f) => f.p(),
            Model::TopDown(t) => t.p(),
        }
    }

    /// Predict on the features of `d`. Hierarchical leaf probabilities are
    /// only computed when `with_probs` is set.
    pub fn predict(&self, d: &Dataset, with_probs: bool) -> Result<Prediction> {
        if d.p() != self.p() {
            return Err(Error::fit(format!("model expects {} features, data has {}", self.p(), d.p())));
        }
        let x = d.features();
        match self {
            Model::Linear(m) => Ok(Prediction::Real(m.predict(x)?)),
            Model::Forest(f) if f.is_classifier() => {
                let probs = f.predict_proba(x)?;
                let c = f.n_classes();
                let labels = probs.chunks(c).map(forest::argmax).collect();
                Ok(Prediction::Class { probs, n_classes: c, labels })
            }
            Model::Forest(f) => Ok(Prediction::Real(f.predict_real(x)?)),
            Model::TopDown(t) => {
                let leaves = t.predict_leaves(x)?;
                let leaf_probs = if with_probs { Some(t.predict_proba(x)?) } else { None };
                Ok(Prediction::Hier { leaves, leaf_probs, tree: Arc::clone(t.tree()) })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_strings_round_trip() {
        for s in ["ols", "forest:n_trees=100", "topdown:n_trees=50,mtry=2,min_node_size=3,bootstrap=false"] {
            assert_eq!(s.parse::<LearnerSpec>().unwrap().to_string(), s);
        }
        assert!("ols:n_trees=3".parse::<LearnerSpec>().is_err());
        assert!("forest:depth=3".parse::<LearnerSpec>().is_err());
        assert!("svm".parse::<LearnerSpec>().is_err());
    }

    #[test]
    fn spec_json_forms() {
        let s: LearnerSpec = serde_json::from_str(r#"{"family":"forest","n_trees":10}"#).unwrap();
        assert_eq!(s, LearnerSpec::Forest(ForestParams { n_trees: 10, ..Default::default() }));
        let s: LearnerSpec = serde_json::from_str(r#"{"family":"ols"}"#).unwrap();
        assert_eq!(s, LearnerSpec::Ols);
        assert!(serde_json::from_str::<LearnerSpec>(r#"{"family":"forest","trees":10}"#).is_err());
    }

    #[test]
    fn label_kind_mismatch_is_an_error() {
        let d = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], Label::Class(vec![0, 1, 0])).unwrap();
        assert!(fit(&LearnerSpec::Ols, &d, 0).is_err());
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let d = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![5.0]], Label::Real(vec![1.0, 2.0, 3.0, 5.5])).unwrap();
        let m = fit(&LearnerSpec::Ols, &d, 0).unwrap();
        let wide = Dataset::from_rows(&[vec![1.0, 2.0]], Label::Real(vec![0.0])).unwrap();
        assert!(m.predict(&wide, false).is_err());
        match m.predict(&d, false).unwrap() {
            Prediction::Real(v) => assert_eq!(v.len(), 4),
            other => panic!("unexpected {other:?}"),
        }
    }
}
