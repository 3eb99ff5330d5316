//! Study configuration, the replicate loop and the result table.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{estimate_ge_multi, true_ge_multi, Weighting};
use crate::data::{load_dataset, Dataset, LabelKind, Schema};
use crate::error::{Error, Result};
use crate::learners::LearnerSpec;
use crate::metrics::MetricSpec;
use crate::rng;
use crate::simgen::{
    draw_pps_sample, gen_clustered, gen_drift, gen_nsrs_population, gen_nsrs_superpopulation, ClusteredConfig,
    DriftConfig, HierConfig, HierModel, NsrsConfig,
};
use crate::splitters::Scheme;

pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_TEST_SIZE: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Clustered,
    Nsrs,
    Drift,
    Hierarchical,
    Custom,
}

impl std::str::FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown study {s:?}")))
    }
}

/// Fixed data set for custom studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSource {
    pub data: PathBuf,
    #[serde(default)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Clustered(ClusteredConfig),
    Nsrs(NsrsConfig),
    Drift(DriftConfig),
    Hierarchical(HierConfig),
    Custom(CustomSource),
}

impl Generator {
    pub fn parse(kind: StudyKind, value: serde_json::Value) -> Result<Self> {
        Ok(match kind {
            StudyKind::Clustered => Generator::Clustered(serde_json::from_value(value)?),
            StudyKind::Nsrs => Generator::Nsrs(serde_json::from_value(value)?),
            StudyKind::Drift => Generator::Drift(serde_json::from_value(value)?),
            StudyKind::Hierarchical => Generator::Hierarchical(serde_json::from_value(value)?),
            StudyKind::Custom => Generator::Custom(serde_json::from_value(value)?),
        })
    }

    fn label_kind(&self) -> Option<LabelKind> {
        match self {
            Generator::Clustered(_) | Generator::Nsrs(_) | Generator::Drift(_) => Some(LabelKind::Real),
            Generator::Hierarchical(_) => Some(LabelKind::Hier),
            Generator::Custom(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    pub scheme: Scheme,
    #[serde(default)]
    pub weighting: Weighting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueGeSpec {
    pub test_size: usize,
    /// Drift studies: subset of timepoint tags; all when absent.
    #[serde(default)]
    pub timepoints: Option<Vec<String>>,
}

fn hundred() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub study: StudyKind,
    pub generator: serde_json::Value,
    pub learners: Vec<LearnerSpec>,
    pub metrics: Vec<MetricSpec>,
    pub resampling: Vec<MethodSpec>,
    #[serde(default)]
    pub true_ge: Option<TrueGeSpec>,
    #[serde(default = "hundred")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Adds a wall_ms column; timings make the output non-reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a JSON config; relative data paths resolve against its directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut spec = ExperimentSpec::parse(&std::fs::read_to_string(path)?)?;
        if spec.study == StudyKind::Custom {
            let base = path.parent().unwrap_or(Path::new(""));
            if let Generator::Custom(mut c) = spec.generator()? {
                c.data = base.join(&c.data);
                c.schema = c.schema.map(|s| base.join(s));
                spec.generator = serde_json::to_value(c)?;
            }
        }
        Ok(spec)
    }

    pub fn generator(&self) -> Result<Generator> {
        Generator::parse(self.study, self.generator.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let gen = self.generator()?;
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.learners.is_empty() || self.metrics.is_empty() || self.resampling.is_empty() {
            return Err(Error::Config("learners, metrics and resampling must each list at least one entry".into()));
        }
        let mut names: Vec<&str> = self.resampling.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate resampling name {:?}", w[0])));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if let Some(kind) = gen.label_kind() {
            for m in &self.metrics {
                let ok = match kind {
                    LabelKind::Real => matches!(m, MetricSpec::Mse | MetricSpec::Mae),
                    LabelKind::Hier => !matches!(m, MetricSpec::Mse | MetricSpec::Mae | MetricSpec::Flat(..)),
                    LabelKind::Class => !matches!(m, MetricSpec::Mse | MetricSpec::Mae),
                };
                if !ok {
                    return Err(Error::Config(format!("metric {m} does not apply to {kind:?} labels")));
                }
            }
        }
        if let Some(t) = &self.true_ge {
            if t.test_size == 0 {
                return Err(Error::Config("true_ge.test_size must be positive".into()));
            }
            if matches!(gen, Generator::Custom(_)) {
                return Err(Error::Config("custom studies have no data-generating process for true_ge".into()));
            }
        }
        if let Generator::Drift(cfg) = &gen {
            self.drift_timepoints(cfg)?;
        }
        Ok(())
    }

    fn test_size(&self, gen: &Generator) -> Option<usize> {
        match (&self.true_ge, gen) {
            (Some(t), _) => Some(t.test_size),
            (None, Generator::Nsrs(_) | Generator::Drift(_) | Generator::Hierarchical(_)) => Some(DEFAULT_TEST_SIZE),
            (None, _) => None,
        }
    }

    fn drift_timepoints(&self, cfg: &DriftConfig) -> Result<Vec<(&'static str, f64)>> {
        let all = cfg.timepoints();
        match self.true_ge.as_ref().and_then(|t| t.timepoints.as_ref()) {
            None => Ok(all),
            Some(tags) => tags
                .iter()
                .map(|tag| {
                    all.iter()
                        .find(|(t, _)| t == tag)
                        .copied()
                        .ok_or_else(|| Error::Config(format!("unknown timepoint {tag:?}")))
                })
                .collect(),
        }
    }

    /// Column tags of the true-GE columns.
    pub fn true_ge_tags(&self) -> Result<Vec<String>> {
        Ok(match self.generator()? {
            Generator::Drift(cfg) => self.drift_timepoints(&cfg)?.iter().map(|(t, _)| format!("true_ge_{t}")).collect(),
            _ => vec!["true_ge".to_string()],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub replicate: usize,
    pub setting: String,
    pub method: String,
    pub estimate: f64,
    pub true_ge: Vec<Option<f64>>,
    pub wall_ms: f64,
    /// Splits skipped because the learner could not be fitted.
    pub skipped_splits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub true_ge_columns: Vec<String>,
    pub timing: bool,
    pub rows: Vec<ResultRow>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl ExperimentResult {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["replicate", "setting", "method", "estimate"].iter().map(|s| s.to_string()).collect();
        h.extend(self.true_ge_columns.iter().cloned());
        if self.timing {
            h.push("wall_ms".into());
        }
        h
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![r.replicate.to_string(), r.setting.clone(), r.method.clone(), r.estimate.to_string()];
            rec.extend(r.true_ge.iter().map(|v| fmt_opt(*v)));
            if self.timing {
                rec.push(format!("{:.3}", r.wall_ms));
            }
            w.write_record(rec)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
            .expect("csv output is utf-8");
        Ok(format!("#schema={SCHEMA_VERSION}\n{body}"))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    /// Rows of one setting and method, in replicate order.
    pub fn select<'a>(&'a self, setting: &'a str, method: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.setting == setting && r.method == method)
    }
}

pub fn setting_id(learner: &LearnerSpec, metric: &MetricSpec) -> String {
    format!("{learner}|{metric}")
}

/// State shared by all replicates.
#[allow(clippy::large_enum_variant)]
enum Shared {
    None,
    Hier(Box<HierModel>),
    Data(Dataset),
}

/// Training data and true-GE test sets of one replicate.
fn replicate_data(gen: &Generator, shared: &Shared, spec: &ExperimentSpec, seed: u64) -> Result<(Dataset, Vec<Dataset>)> {
    let size = spec.test_size(gen);
    let test_seed = |k: u64| rng::derive(seed, &[4, k]);
    Ok(match (gen, shared) {
        (Generator::Clustered(cfg), _) => {
            let d = gen_clustered(cfg, rng::derive(seed, &[0]))?;
            let tests = match size {
                Some(s) => {
                    let m = s.div_ceil(cfg.n_m).max(2);
                    vec![gen_clustered(&ClusteredConfig { m, ..cfg.clone() }, test_seed(0))?]
                }
                None => Vec::new(),
            };
            (d, tests)
        }
        (Generator::Nsrs(cfg), _) => {
            let (pop, design) = gen_nsrs_population(cfg, rng::derive(seed, &[0]))?;
            let idx = draw_pps_sample(&design, rng::derive(seed, &[1]))?;
            let d = pop.subset(&idx)?;
            let tests = match size {
                Some(s) => vec![gen_nsrs_superpopulation(cfg, s, test_seed(0))?],
                None => Vec::new(),
            };
            (d, tests)
        }
        (Generator::Drift(cfg), _) => {
            let (d, handle) = gen_drift(cfg, rng::derive(seed, &[0]))?;
            let mut tests = Vec::new();
            if let Some(s) = size {
                for (k, (_, t)) in spec.drift_timepoints(cfg)?.into_iter().enumerate() {
                    tests.push(handle.sample_at(t, s, test_seed(k as u64))?);
                }
            }
            (d, tests)
        }
        (Generator::Hierarchical(cfg), Shared::Hier(model)) => {
            let d = model.sample(cfg.n_train, rng::derive(seed, &[0]))?;
            let tests = match size {
                Some(s) => vec![model.sample(s, test_seed(0))?],
                None => Vec::new(),
            };
            (d, tests)
        }
        (Generator::Custom(_), Shared::Data(d)) => (d.clone(), Vec::new()),
        _ => unreachable!("shared state matches the generator"),
    })
}

fn run_replicate(spec: &ExperimentSpec, gen: &Generator, shared: &Shared, n_true: usize, r: usize) -> Result<Vec<ResultRow>> {
    let seed = rng::derive(spec.seed, &[r as u64]);
    let (d, tests) = replicate_data(gen, shared, spec, seed)?;
    let plans = spec
        .resampling
        .iter()
        .enumerate()
        .map(|(m, method)| method.scheme.build(&d, rng::derive(seed, &[1, m as u64])))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (l, learner) in spec.learners.iter().enumerate() {
        // truth[t][metric]
        let truth = if tests.is_empty() {
            Vec::new()
        } else {
            true_ge_multi(&d, learner, &spec.metrics, &tests, rng::derive(seed, &[3, l as u64]))?
        };
        for (m, (method, plan)) in spec.resampling.iter().zip(&plans).enumerate() {
            let start = Instant::now();
            let est = estimate_ge_multi(&d, plan, learner, &spec.metrics, method.weighting, rng::derive(seed, &[2, l as u64, m as u64]))?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            for (k, (metric, e)) in spec.metrics.iter().zip(est).enumerate() {
                let true_ge = if truth.is_empty() { vec![None; n_true] } else { truth.iter().map(|t| Some(t[k])).collect() };
                rows.push(ResultRow {
                    replicate: r,
                    setting: setting_id(learner, metric),
                    method: method.name.clone(),
                    estimate: e.result.value,
                    true_ge,
                    wall_ms,
                    skipped_splits: e.skipped.len(),
                });
            }
        }
    }
    // (replicate, setting, method) in configuration order
    let metric_pos = |s: &str| spec.metrics.iter().position(|m| s.ends_with(&format!("|{m}"))).unwrap_or(0);
    let method_pos = |s: &str| spec.resampling.iter().position(|m| m.name == s).unwrap_or(0);
    let learner_pos = |s: &str| spec.learners.iter().position(|l| s.starts_with(&format!("{l}|"))).unwrap_or(0);
    rows.sort_by_key(|row| (learner_pos(&row.setting), metric_pos(&row.setting), method_pos(&row.method)));
    Ok(rows)
}

/// Runs all replicates, in parallel on `workers` threads (default 1). The
/// output depends only on the spec and its seed.
pub fn run_study(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let gen = spec.generator()?;
    let shared = match &gen {
        Generator::Hierarchical(cfg) => Shared::Hier(Box::new(HierModel::generate(cfg, rng::derive(spec.seed, &[u64::MAX]))?)),
        Generator::Custom(c) => {
            let schema = match &c.schema {
                Some(p) => Schema::read(p)?,
                None => Schema::inferred(),
            };
            Shared::Data(load_dataset(&c.data, &schema)?)
        }
        _ => Shared::None,
    };
    let tags = spec.true_ge_tags()?;
    let n_true = tags.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.unwrap_or(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let per_rep: Vec<Vec<ResultRow>> = pool.install(|| {
        (0..spec.replicates)
            .into_par_iter()
            .map(|r| {
                run_replicate(spec, &gen, &shared, n_true, r).map_err(|e| Error::Replicate { replicate: r, source: Box::new(e) })
            })
            .collect::<Result<_>>()
    })?;
    Ok(ExperimentResult { true_ge_columns: tags, timing: spec.timing, rows: per_rep.into_iter().flatten().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clustered_spec() -> String {
        r#"{
            "study": "clustered",
            "generator": {"M": 6, "n_m": 5, "sigma2": 0.25, "sigma2_1": 1, "sigma2_2": 1, "feature_mode": "all_iid"},
            "learners": [{"family": "ols"}],
            "metrics": ["mse"],
            "resampling": [
                {"name": "cv", "scheme": {"kind": "repeated_kfold", "k": 3, "repeats": 2}},
                {"name": "grouped", "scheme": {"kind": "grouped_kfold", "k": 3}}
            ],
            "replicates": 3,
            "seed": 11
        }"#
        .to_string()
    }

    #[test]
    fn clustered_study_rows_and_header() {
        let spec = ExperimentSpec::parse(&clustered_spec()).unwrap();
        let res = run_study(&spec).unwrap();
        assert_eq!(res.rows.len(), 3 * 2);
        let csv = res.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("#schema=1"));
        assert_eq!(lines.next(), Some("replicate,setting,method,estimate,true_ge"));
        assert!(csv.contains("0,ols|mse,cv,"));
        assert!(res.rows.iter().all(|r| r.true_ge == vec![None]));
    }

    #[test]
    fn unknown_keys_and_bad_metrics_rejected() {
        let bad = clustered_spec().replace("\"seed\": 11", "\"seed\": 11, \"seeds\": 3");
        assert!(ExperimentSpec::parse(&bad).is_err());
        let bad = clustered_spec().replace("\"n_m\": 5", "\"n_m\": 5, \"nm\": 5");
        assert!(ExperimentSpec::parse(&bad).is_err());
        let bad = clustered_spec().replace("[\"mse\"]", "[\"accuracy\"]");
        assert!(ExperimentSpec::parse(&bad).is_err());
        let bad = clustered_spec().replace("\"replicates\": 3", "\"replicates\": 0");
        assert!(ExperimentSpec::parse(&bad).is_err());
    }

    #[test]
    fn drift_columns_follow_timepoints() {
        let text = r#"{
            "study": "drift",
            "generator": {"n_train": 80, "label_drift": "strong"},
            "learners": [{"family": "ols"}],
            "metrics": ["mse"],
            "resampling": [{"name": "oos", "scheme": {"kind": "out_of_sample", "test_seasons": 1}}],
            "true_ge": {"test_size": 500, "timepoints": ["Els", "E2fus"]},
            "replicates": 2
        }"#;
        let spec = ExperimentSpec::parse(text).unwrap();
        let res = run_study(&spec).unwrap();
        assert_eq!(res.header(), ["replicate", "setting", "method", "estimate", "true_ge_Els", "true_ge_E2fus"]);
        assert!(res.rows.iter().all(|r| r.true_ge.iter().all(Option::is_some)));
    }
}
