//! Resampling plans: ordered train/test index splits.
//!
//! Every builder is a pure function of (metadata, parameters, seed). Index
//! lists inside a split are sorted ascending.

mod cv;
pub mod kmeans;
mod spatial;
mod temporal;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};

pub use cv::{
    grouped_kfold, holdout, kfold, repeated_grouped_kfold, repeated_kfold, repeated_stratified_kfold,
    stratified_kfold,
};
pub use spatial::{
    clustered_groups, distance, geo_units, leave_one_disc_out, loo_buffer, rectangular_tiles, single_spatial_split,
    tile_of, Boundary,
};
pub use temporal::{out_of_sample, timeseries_cv};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Repetition this split belongs to (0 for unrepeated schemes).
    pub repeat: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterSource {
    Coords,
    Features,
}

/// Block-to-fold assignment for tiles and geographical units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockMode {
    /// Each nonempty block is its own test set.
    OnePerFold,
    /// Nonempty blocks are dealt at random into `k` folds.
    ToKFolds(usize),
}

impl BlockMode {
    fn from_folds(folds: Option<usize>) -> Self {
        folds.map_or(BlockMode::OnePerFold, BlockMode::ToKFolds)
    }
}

fn one() -> usize {
    1
}

/// Scheme tag and parameters, as echoed in plan headers and configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scheme {
    Holdout {
        test_fraction: f64,
    },
    Kfold {
        k: usize,
    },
    RepeatedKfold {
        k: usize,
        repeats: usize,
    },
    GroupedKfold {
        k: usize,
        #[serde(default = "one")]
        repeats: usize,
    },
    StratifiedKfold {
        k: usize,
        #[serde(default = "one")]
        repeats: usize,
    },
    SingleSpatialSplit {
        boundary: Boundary,
        #[serde(default)]
        buffer: f64,
    },
    RectangularTiles {
        rows: usize,
        cols: usize,
        /// `None`: one block per fold.
        #[serde(default)]
        folds: Option<usize>,
        /// `[xmin, xmax, ymin, ymax]`; defaults to the bounding box.
        #[serde(default)]
        extent: Option<[f64; 4]>,
    },
    ClusteredGroups {
        k: usize,
        source: ClusterSource,
    },
    LooBuffer {
        radius: f64,
    },
    LeaveOneDiscOut {
        k: usize,
        disc_radius: f64,
        #[serde(default)]
        buffer: f64,
    },
    GeoUnits {
        #[serde(default)]
        folds: Option<usize>,
    },
    TimeseriesCv {
        #[serde(default)]
        gap: u32,
        /// Season count used to bin the time column when no season column exists.
        #[serde(default)]
        seasons: Option<u32>,
    },
    OutOfSample {
        test_seasons: u32,
        #[serde(default)]
        gap: u32,
        #[serde(default)]
        seasons: Option<u32>,
    },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Holdout { .. } => "holdout",
            Scheme::Kfold { .. } => "kfold",
            Scheme::RepeatedKfold { .. } => "repeated_kfold",
            Scheme::GroupedKfold { .. } => "grouped_kfold",
            Scheme::StratifiedKfold { .. } => "stratified_kfold",
            Scheme::SingleSpatialSplit { .. } => "single_spatial_split",
            Scheme::RectangularTiles { .. } => "rectangular_tiles",
            Scheme::ClusteredGroups { .. } => "clustered_groups",
            Scheme::LooBuffer { .. } => "loo_buffer",
            Scheme::LeaveOneDiscOut { .. } => "leave_one_disc_out",
            Scheme::GeoUnits { .. } => "geo_units",
            Scheme::TimeseriesCv { .. } => "timeseries_cv",
            Scheme::OutOfSample { .. } => "out_of_sample",
        }
    }

    /// Whether each repeat's test sets partition all rows.
    pub fn is_partition(&self) -> bool {
        matches!(
            self,
            Scheme::Kfold { .. }
                | Scheme::RepeatedKfold { .. }
                | Scheme::GroupedKfold { .. }
                | Scheme::StratifiedKfold { .. }
                | Scheme::RectangularTiles { .. }
                | Scheme::ClusteredGroups { .. }
                | Scheme::GeoUnits { .. }
        )
    }

    pub fn repeats(&self) -> usize {
        match self {
            Scheme::RepeatedKfold { repeats, .. }
            | Scheme::GroupedKfold { repeats, .. }
            | Scheme::StratifiedKfold { repeats, .. } => *repeats,
            _ => 1,
        }
    }

    /// Builds a plan for `d`, pulling the metadata column the scheme needs.
    pub fn build(&self, d: &Dataset, seed: u64) -> Result<ResamplingPlan> {
        let m = d.meta();
        let coords = || m.coords.as_deref().ok_or_else(|| Error::split(format!("{} needs coordinates", self.name())));
        let plan = match self {
            Scheme::Holdout { test_fraction } => holdout(d.n(), *test_fraction, seed)?,
            Scheme::Kfold { k } => kfold(d.n(), *k, seed)?,
            Scheme::RepeatedKfold { k, repeats } => repeated_kfold(d.n(), *k, *repeats, seed)?,
            Scheme::GroupedKfold { k, repeats } => {
                let g = m.cluster_id.as_deref().ok_or_else(|| Error::split("grouped_kfold needs cluster ids"))?;
                repeated_grouped_kfold(g, *k, *repeats, seed)?
            }
            Scheme::StratifiedKfold { k, repeats } => {
                let labels: Vec<usize> = match d.label() {
                    Label::Class(v) => v.clone(),
                    Label::Hier { leaves, .. } => leaves.clone(),
                    Label::Real(_) => return Err(Error::split("stratified_kfold needs class or leaf labels")),
                };
                repeated_stratified_kfold(&labels, *k, *repeats, seed)?
            }
            Scheme::SingleSpatialSplit { boundary, buffer } => single_spatial_split(coords()?, boundary, *buffer)?,
            Scheme::RectangularTiles { rows, cols, folds, extent } => {
                rectangular_tiles(coords()?, (*rows, *cols), BlockMode::from_folds(*folds), *extent, seed)?
            }
            Scheme::ClusteredGroups { k, source } => {
                let (points, dim) = match source {
                    ClusterSource::Coords => (coords()?.iter().flatten().copied().collect::<Vec<_>>(), 2),
                    ClusterSource::Features => (d.features().to_vec(), d.p()),
                };
                clustered_groups(&points, dim, *k, *source, seed)?
            }
            Scheme::LooBuffer { radius } => loo_buffer(coords()?, *radius)?,
            Scheme::LeaveOneDiscOut { k, disc_radius, buffer } => {
                leave_one_disc_out(coords()?, *k, *disc_radius, *buffer, seed)?
            }
            Scheme::GeoUnits { folds } => {
                let u = m.unit_id.as_deref().ok_or_else(|| Error::split("geo_units needs unit ids"))?;
                geo_units(u, BlockMode::from_folds(*folds), seed)?
            }
            Scheme::TimeseriesCv { gap, seasons } => timeseries_cv(&d.seasons(*seasons)?, *gap)?,
            Scheme::OutOfSample { test_seasons, gap, seasons } => {
                out_of_sample(&d.seasons(*seasons)?, *test_seasons, *gap)?
            }
        };
        Ok(ResamplingPlan { scheme: self.clone(), ..plan })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResamplingPlan {
    pub scheme: Scheme,
    pub seed: u64,
    /// Number of rows the indices refer to.
    pub n: usize,
    pub splits: Vec<Split>,
}

impl ResamplingPlan {
    pub(crate) fn new(scheme: Scheme, seed: u64, n: usize, splits: Vec<Split>) -> Result<Self> {
        let plan = ResamplingPlan { scheme, seed, n, splits };
        plan.validate()?;
        Ok(plan)
    }

    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    /// Splits grouped by repeat.
    pub fn by_repeat(&self) -> Vec<&[Split]> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.splits.len() {
            if i == self.splits.len() || self.splits[i].repeat != self.splits[start].repeat {
                out.push(&self.splits[start..i]);
                start = i;
            }
        }
        out
    }

    /// Structural checks shared by every scheme: nonempty, in-range,
    /// disjoint train/test per split, and partition coverage per repeat
    /// for fold schemes.
    pub fn validate(&self) -> Result<()> {
        if self.splits.is_empty() {
            return Err(Error::split("plan has no splits"));
        }
        let mut mark = vec![0u32; self.n];
        let mut stamp = 0u32;
        for (j, s) in self.splits.iter().enumerate() {
            if s.train.is_empty() || s.test.is_empty() {
                return Err(Error::split(format!(
                    "split {j} has an empty {} set",
                    if s.train.is_empty() { "train" } else { "test" }
                )));
            }
            stamp += 1;
            for &i in &s.test {
                if i >= self.n {
                    return Err(Error::split(format!("split {j}: index {i} out of range for {} rows", self.n)));
                }
                mark[i] = stamp;
            }
            for &i in &s.train {
                if i >= self.n {
                    return Err(Error::split(format!("split {j}: index {i} out of range for {} rows", self.n)));
                }
                if mark[i] == stamp {
                    return Err(Error::split(format!("split {j}: index {i} is in both train and test")));
                }
            }
        }
        if self.scheme.is_partition() {
            for (r, group) in self.by_repeat().into_iter().enumerate() {
                let mut seen = vec![false; self.n];
                for s in group {
                    for &i in &s.test {
                        if seen[i] {
                            return Err(Error::split(format!("repeat {r}: index {i} tested twice")));
                        }
                        seen[i] = true;
                    }
                }
                if let Some(miss) = seen.iter().position(|&b| !b) {
                    return Err(Error::split(format!("repeat {r}: index {miss} never tested")));
                }
            }
        }
        Ok(())
    }

    /// Line-oriented text form: a `#plan` header echoing the scheme, seed
    /// and row count, then `split <j>: train=<list> test=<list>` lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let scheme = serde_json::to_string(&self.scheme).expect("scheme serializes");
        let _ = writeln!(out, "#plan seed={} n={} scheme={}", self.seed, self.n, scheme);
        for (j, s) in self.splits.iter().enumerate() {
            let _ = writeln!(out, "split {j}: train={} test={}", join(&s.train), join(&s.test));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::split("empty plan file"))?;
        let rest = header.trim().strip_prefix("#plan").ok_or_else(|| Error::split("plan header must start with #plan"))?;
        let (params, scheme_json) =
            rest.split_once("scheme=").ok_or_else(|| Error::split("plan header lacks scheme="))?;
        let scheme: Scheme = serde_json::from_str(scheme_json.trim())?;
        let mut seed = None;
        let mut n = None;
        for tok in params.split_whitespace() {
            match tok.split_once('=') {
                Some(("seed", v)) => seed = v.parse::<u64>().ok(),
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                _ => return Err(Error::split(format!("unexpected plan header token {tok:?}"))),
            }
        }
        let (seed, n) = match (seed, n) {
            (Some(s), Some(n)) => (s, n),
            _ => return Err(Error::split("plan header needs seed= and n=")),
        };
        let mut splits = Vec::new();
        for (j, line) in lines.enumerate() {
            let body = line
                .trim()
                .strip_prefix(&format!("split {j}:"))
                .ok_or_else(|| Error::split(format!("expected 'split {j}:' line, got {line:?}")))?;
            let body = body.trim();
            let (tr, te) = body.split_once(" test=").ok_or_else(|| Error::split(format!("split {j}: missing test=")))?;
            let tr = tr.strip_prefix("train=").ok_or_else(|| Error::split(format!("split {j}: missing train=")))?;
            splits.push(Split { train: parse_list(tr)?, test: parse_list(te)?, repeat: 0 });
        }
        let repeats = scheme.repeats();
        if repeats > 1 {
            if splits.len() % repeats != 0 {
                return Err(Error::split("split count is not a multiple of the repeat count"));
            }
            let per = splits.len() / repeats;
            for (j, s) in splits.iter_mut().enumerate() {
                s.repeat = j / per;
            }
        }
        ResamplingPlan::new(scheme, seed, n, splits)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn join(v: &[usize]) -> String {
    let mut s = String::with_capacity(v.len() * 4);
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{x}");
    }
    s
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::split(format!("bad index {t:?}"))))
        .collect()
}

/// Splits from a per-row fold assignment; fold `f` is test set `f`.
pub(crate) fn splits_from_folds(fold_of: &[usize], k: usize, repeat: usize) -> Vec<Split> {
    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &f) in fold_of.iter().enumerate() {
        tests[f].push(i);
    }
    tests
        .into_iter()
        .enumerate()
        .map(|(f, test)| Split {
            train: fold_of.iter().enumerate().filter(|(_, &g)| g != f).map(|(i, _)| i).collect(),
            test,
            repeat,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_keeps_repeats() {
        let p = repeated_kfold(12, 3, 2, 5).unwrap();
        let text = p.render();
        assert!(text.starts_with("#plan seed=5 n=12 scheme={\"kind\":\"repeated_kfold\",\"k\":3,\"repeats\":2}"));
        assert!(text.contains("\nsplit 0: train="));
        let back = ResamplingPlan::parse(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn parse_rejects_overlap_and_bad_header() {
        let bad = "#plan seed=1 n=3 scheme={\"kind\":\"kfold\",\"k\":3}\nsplit 0: train=0,1 test=1\n";
        assert!(ResamplingPlan::parse(bad).is_err());
        assert!(ResamplingPlan::parse("split 0: train=0 test=1\n").is_err());
        let out_of_range = "#plan seed=1 n=2 scheme={\"kind\":\"holdout\",\"test_fraction\":0.5}\nsplit 0: train=0 test=5\n";
        assert!(ResamplingPlan::parse(out_of_range).unwrap_err().to_string().contains("out of range"));
    }

    #[test]
    fn scheme_config_rejects_unknown_keys() {
        let ok: Scheme = serde_json::from_str(r#"{"kind":"grouped_kfold","k":5}"#).unwrap();
        assert_eq!(ok, Scheme::GroupedKfold { k: 5, repeats: 1 });
        assert!(serde_json::from_str::<Scheme>(r#"{"kind":"kfold","k":5,"kk":1}"#).is_err());
    }
}
