//! Performance measures: regression losses, design-weighted estimators,
//! flat classification metrics and the hierarchical metric family.

pub mod design;
pub mod flat;
pub mod hier;
pub mod regression;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use design::{hajek_loss, ht_loss, SamplingDesign};
pub use flat::{accuracy, flat_prf};
pub use hier::{h_loss, hier_prf, shortest_path_loss, sym_diff_loss, win_score};
pub use regression::{mae, mse};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::learners::Prediction;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricResult {
    pub name: String,
    /// Parameter description, e.g. `costs=1;0.5`.
    pub params: String,
    pub value: f64,
    /// Per-observation values whose mean is `value`.
    pub per_observation: Option<Vec<f64>>,
    /// Per-split values when the result aggregates a resampling plan.
    pub per_split: Option<Vec<f64>>,
}

impl MetricResult {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        MetricResult { name: name.into(), params: String::new(), value, per_observation: None, per_split: None }
    }

    /// Mean of per-observation values, kept alongside.
    pub fn pointwise(name: impl Into<String>, values: Vec<f64>) -> Self {
        let value = values.iter().sum::<f64>() / values.len() as f64;
        MetricResult { per_observation: Some(values), ..MetricResult::new(name, value) }
    }

    pub fn with_params(mut self, params: impl Into<String>) -> Self {
        self.params = params.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Micro,
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub(crate) fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Arithmetic mean of per-split values.
pub fn aggregate_plan(per_split: &[f64]) -> Result<MetricResult> {
    if per_split.is_empty() {
        return Err(Error::metric("no split values to aggregate"));
    }
    let mean = per_split.iter().sum::<f64>() / per_split.len() as f64;
    Ok(MetricResult { per_split: Some(per_split.to_vec()), ..MetricResult::new("plan_mean", mean) }
        .with_params(format!("B={}", per_split.len())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrfPart {
    Precision,
    Recall,
    F1,
}

impl PrfPart {
    fn pick(self, p: Prf) -> f64 {
        match self {
            PrfPart::Precision => p.precision,
            PrfPart::Recall => p.recall,
            PrfPart::F1 => p.f1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            PrfPart::Precision => "precision",
            PrfPart::Recall => "recall",
            PrfPart::F1 => "f1",
        }
    }
}

/// A named metric as used in configs and on the command line.
///
/// Names: `mse`, `mae`, `accuracy`, `{precision,recall,f1}_{micro,macro}`,
/// `h{precision,recall,f1}_{micro,macro}`, `sym_diff`, `shortest_path`,
/// `weighted_shortest_path[:w1;w2;...]`, `h_loss[:c1;c2;...]`, `win`.
/// Omitted weights and costs default to 1, 1/2, 1/4, ... per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MetricSpec {
    Mse,
    Mae,
    Accuracy,
    Flat(PrfPart, Averaging),
    Hier(PrfPart, Averaging),
    SymDiff,
    ShortestPath,
    WeightedShortestPath(Option<Vec<f64>>),
    HLoss(Option<Vec<f64>>),
    Win,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split([';', ','])
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("invalid number {t:?}"))))
        .collect()
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let no_arg = |m: MetricSpec| match arg {
            None => Ok(m),
            Some(_) => Err(Error::Config(format!("metric {head} takes no parameters"))),
        };
        match head {
            "mse" => return no_arg(MetricSpec::Mse),
            "mae" => return no_arg(MetricSpec::Mae),
            "accuracy" => return no_arg(MetricSpec::Accuracy),
            "sym_diff" => return no_arg(MetricSpec::SymDiff),
            "shortest_path" => return no_arg(MetricSpec::ShortestPath),
            "win" => return no_arg(MetricSpec::Win),
            "weighted_shortest_path" => return Ok(MetricSpec::WeightedShortestPath(arg.map(parse_list).transpose()?)),
            "h_loss" => return Ok(MetricSpec::HLoss(arg.map(parse_list).transpose()?)),
            _ => {}
        }
        let (part, avg) = head
            .rsplit_once('_')
            .ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))?;
        let avg = match avg {
            "micro" => Averaging::Micro,
            "macro" => Averaging::Macro,
            _ => return Err(Error::Config(format!("unknown metric {s:?}"))),
        };
        let (hier, part) = match part.strip_prefix('h') {
            Some(rest) if !rest.is_empty() => (true, rest),
            _ => (false, part),
        };
        let part = match part {
            "precision" => PrfPart::Precision,
            "recall" => PrfPart::Recall,
            "f1" => PrfPart::F1,
            _ => return Err(Error::Config(format!("unknown metric {s:?}"))),
        };
        no_arg(if hier { MetricSpec::Hier(part, avg) } else { MetricSpec::Flat(part, avg) })
    }
}

impl TryFrom<String> for MetricSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MetricSpec> for String {
    fn from(m: MetricSpec) -> String {
        m.to_string()
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let avg = |a: &Averaging| match a {
            Averaging::Micro => "micro",
            Averaging::Macro => "macro",
        };
        match self {
            MetricSpec::Mse => f.write_str("mse"),
            MetricSpec::Mae => f.write_str("mae"),
            MetricSpec::Accuracy => f.write_str("accuracy"),
            MetricSpec::Flat(p, a) => write!(f, "{}_{}", p.name(), avg(a)),
            MetricSpec::Hier(p, a) => write!(f, "h{}_{}", p.name(), avg(a)),
            MetricSpec::SymDiff => f.write_str("sym_diff"),
            MetricSpec::ShortestPath => f.write_str("shortest_path"),
            MetricSpec::WeightedShortestPath(None) => f.write_str("weighted_shortest_path"),
            MetricSpec::WeightedShortestPath(Some(w)) => write!(f, "weighted_shortest_path:{}", hier::join(w)),
            MetricSpec::HLoss(None) => f.write_str("h_loss"),
            MetricSpec::HLoss(Some(c)) => write!(f, "h_loss:{}", hier::join(c)),
            MetricSpec::Win => f.write_str("win"),
        }
    }
}

impl MetricSpec {
    /// Point-wise metrics are means of per-observation values and can be
    /// design weighted.
    pub fn is_pointwise(&self) -> bool {
        !matches!(self, MetricSpec::Flat(..) | MetricSpec::Hier(..))
    }

    pub fn needs_probabilities(&self) -> bool {
        matches!(self, MetricSpec::Win)
    }

    /// Evaluate predictions against true labels.
    pub fn evaluate(&self, truth: &Label, pred: &Prediction) -> Result<MetricResult> {
        if truth.len() != pred.len() {
            return Err(Error::metric(format!("{} labels but {} predictions", truth.len(), pred.len())));
        }
        let mismatch = || Error::metric(format!("metric {self} does not apply to {:?} labels", truth.kind()));
        match (self, truth, pred) {
            (MetricSpec::Mse, Label::Real(y), Prediction::Real(p)) => mse(y, p),
            (MetricSpec::Mae, Label::Real(y), Prediction::Real(p)) => mae(y, p),
            (MetricSpec::Accuracy, Label::Class(y), Prediction::Class { labels, .. }) => accuracy(y, labels),
            (MetricSpec::Accuracy, Label::Hier { leaves: y, .. }, Prediction::Hier { leaves, .. }) => accuracy(y, leaves),
            (MetricSpec::Flat(part, avg), Label::Class(y), Prediction::Class { labels, .. }) => {
                Ok(MetricResult::new(self.to_string(), part.pick(flat_prf(y, labels, *avg)?)))
            }
            (m, Label::Hier { leaves: y, tree }, Prediction::Hier { leaves: yhat, leaf_probs, tree: ptree }) => {
                if tree != ptree {
                    return Err(Error::metric("prediction and labels use different category trees"));
                }
                match m {
                    MetricSpec::Hier(part, avg) => Ok(MetricResult::new(self.to_string(), part.pick(hier_prf(tree, y, yhat, *avg)?))),
                    MetricSpec::SymDiff => sym_diff_loss(tree, y, yhat),
                    MetricSpec::ShortestPath => shortest_path_loss(tree, y, yhat, None),
                    MetricSpec::WeightedShortestPath(w) => {
                        let w = w.clone().unwrap_or_else(|| hier::halving(tree.height()));
                        shortest_path_loss(tree, y, yhat, Some(&w))
                    }
                    MetricSpec::HLoss(c) => {
                        let c = c.clone().unwrap_or_else(|| hier::halving(tree.height()));
                        h_loss(tree, y, yhat, &c)
                    }
                    MetricSpec::Win => {
                        let probs = leaf_probs.as_ref().ok_or_else(|| Error::metric("win score needs leaf probabilities"))?;
                        win_score(tree, y, probs)
                    }
                    _ => Err(mismatch()),
                }
            }
            _ => Err(mismatch()),
        }
        .map(|r| MetricResult { name: self.to_string(), ..r })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_plan(&[2.0, 2.0, 2.0]).unwrap().value, 2.0);
        let r = aggregate_plan(&[1.0, 3.0]).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.per_split.unwrap().len(), 2);
        assert!(aggregate_plan(&[]).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for s in [
            "mse",
            "mae",
            "accuracy",
            "precision_micro",
            "f1_macro",
            "hprecision_macro",
            "hrecall_micro",
            "hf1_macro",
            "sym_diff",
            "shortest_path",
            "weighted_shortest_path",
            "weighted_shortest_path:1;0.5",
            "h_loss:1;0.5;0.25",
            "win",
        ] {
            assert_eq!(s.parse::<MetricSpec>().unwrap().to_string(), s);
        }
        assert!("rmse".parse::<MetricSpec>().is_err());
        assert!("mse:3".parse::<MetricSpec>().is_err());
        assert!("f1_weighted".parse::<MetricSpec>().is_err());
        assert!("h_macro".parse::<MetricSpec>().is_err());
        let m: MetricSpec = serde_json::from_str("\"hf1_macro\"").unwrap();
        assert_eq!(m, MetricSpec::Hier(PrfPart::F1, Averaging::Macro));
    }

    #[test]
    fn harmonic_mean_between_inputs() {
        assert_eq!(harmonic(0.0, 0.0), 0.0);
        let h = harmonic(0.2, 0.8);
        assert!((0.2..=0.8).contains(&h));
    }
}
