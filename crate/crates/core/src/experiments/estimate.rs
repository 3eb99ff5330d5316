//! Plan-driven generalization-error estimation and its test-set reference.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{self, LearnerSpec};
use crate::metrics::{aggregate_plan, hajek_loss, ht_loss, MetricResult, MetricSpec, SamplingDesign};
use crate::rng;
use crate::splitters::ResamplingPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    None,
    Ht,
    Hajek,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Weighting::None),
            "ht" => Ok(Weighting::Ht),
            "hajek" => Ok(Weighting::Hajek),
            other => Err(Error::Config(format!("unknown estimator {other:?} (expected none, ht or hajek)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeEstimate {
    /// Plan mean with per-split values.
    pub result: MetricResult,
    /// Splits whose training set could not be fitted, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// The design of `d` from its inclusion-probability column and population
/// size.
pub fn design_of(d: &Dataset) -> Result<SamplingDesign> {
    let pi = d
        .meta()
        .inclusion_prob
        .clone()
        .ok_or_else(|| Error::Config("design weighting needs an inclusion probability column".into()))?;
    let big_n = d
        .population_size()
        .ok_or_else(|| Error::Config("design weighting needs the population size".into()))?;
    SamplingDesign::new(pi, big_n)
}

/// Weighted value of one test fold. The fold is treated as a sample from
/// the population whose inclusion probabilities are the sample's scaled by
/// the fold's share of the sample, so equal probabilities reproduce the
/// unweighted mean.
fn weighted(r: &MetricResult, design: &SamplingDesign, test: &[usize], weighting: Weighting) -> Result<f64> {
    let losses = r
        .per_observation
        .as_ref()
        .ok_or_else(|| Error::Config(format!("metric {} is not point-wise and cannot be design weighted", r.name)))?;
    let share = test.len() as f64 / design.len() as f64;
    let pi: Vec<f64> = test.iter().map(|&i| design.pi()[i] * share).collect();
    let fold = SamplingDesign::new(pi, design.population_size())?;
    Ok(match weighting {
        Weighting::Ht => ht_loss(losses, &fold)?.value,
        Weighting::Hajek => hajek_loss(losses, &fold)?.value,
        Weighting::None => r.value,
    })
}

/// Estimates for several metrics sharing one fit per split.
///
/// Split `j` is fitted with seed `derive(seed, [j])`. Splits whose learner
/// fails to fit are skipped and reported; if all fail, the call fails.
pub fn estimate_ge_multi(
    d: &Dataset,
    plan: &ResamplingPlan,
    learner: &LearnerSpec,
    metrics: &[MetricSpec],
    weighting: Weighting,
    seed: u64,
) -> Result<Vec<GeEstimate>> {
    if plan.n != d.n() {
        return Err(Error::Config(format!("plan refers to {} rows but the dataset has {} rows", plan.n, d.n())));
    }
    plan.validate()?;
    let design = match weighting {
        Weighting::None => None,
        _ => {
            if let Some(m) = metrics.iter().find(|m| !m.is_pointwise()) {
                return Err(Error::Config(format!("metric {m} is not point-wise and cannot be design weighted")));
            }
            Some(design_of(d)?)
        }
    };
    let probs = metrics.iter().any(MetricSpec::needs_probabilities);
    let mut values = vec![Vec::with_capacity(plan.len()); metrics.len()];
    let mut skipped = Vec::new();
    for (j, split) in plan.splits.iter().enumerate() {
        let train = d.subset(&split.train)?;
        let model = match learners::fit(learner, &train, rng::derive(seed, &[j as u64])) {
            Ok(m) => m,
            Err(e @ Error::Fit(_)) => {
                log::warn!("split {j} skipped: {e}");
                skipped.push((j, e.to_string()));
                continue;
            }
            Err(e) => return Err(e),
        };
        let test = d.subset(&split.test)?;
        let pred = model.predict(&test, probs)?;
        for (k, m) in metrics.iter().enumerate() {
            let r = m.evaluate(test.label(), &pred)?;
            let v = match &design {
                Some(des) => weighted(&r, des, &split.test, weighting)?,
                None => r.value,
            };
            values[k].push(v);
        }
    }
    if skipped.len() == plan.len() {
        return Err(Error::Fit(format!("all {} splits failed to fit", plan.len())));
    }
    metrics
        .iter()
        .zip(values)
        .map(|(m, v)| {
            let mut result = aggregate_plan(&v)?;
            result.name = m.to_string();
            Ok(GeEstimate { result, skipped: skipped.clone() })
        })
        .collect()
}

pub fn estimate_ge(
    d: &Dataset,
    plan: &ResamplingPlan,
    learner: &LearnerSpec,
    metric: &MetricSpec,
    weighting: Weighting,
    seed: u64,
) -> Result<GeEstimate> {
    Ok(estimate_ge_multi(d, plan, learner, std::slice::from_ref(metric), weighting, seed)?.remove(0))
}

/// Fits once on all of `train` and evaluates every metric on every test set:
/// `result[t][m]`.
pub fn true_ge_multi(
    train: &Dataset,
    learner: &LearnerSpec,
    metrics: &[MetricSpec],
    tests: &[Dataset],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let model = learners::fit(learner, train, seed)?;
    let probs = metrics.iter().any(MetricSpec::needs_probabilities);
    tests
        .iter()
        .map(|t| {
            let pred = model.predict(t, probs)?;
            metrics.iter().map(|m| Ok(m.evaluate(t.label(), &pred)?.value)).collect()
        })
        .collect()
}

pub fn approximate_true_ge(train: &Dataset, learner: &LearnerSpec, metric: &MetricSpec, test: &Dataset, seed: u64) -> Result<f64> {
    Ok(true_ge_multi(train, learner, std::slice::from_ref(metric), std::slice::from_ref(test), seed)?[0][0])
}
