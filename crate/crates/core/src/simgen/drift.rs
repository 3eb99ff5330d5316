//! Incremental concept drift over t in [0, 1].

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{season_of, Dataset, Label};
use crate::error::{Error, Result};
use crate::rng;

pub const DRIFT_BETA: [f64; 5] = [2.0, -1.0, 2.0, 0.0, 0.0];
/// Features whose mean drifts.
const DRIFTING: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    None,
    Weak,
    Medium,
    Strong,
}

impl Strength {
    pub fn slope(self) -> f64 {
        match self {
            Strength::None => 0.0,
            Strength::Weak => 0.5,
            Strength::Medium => 1.0,
            Strength::Strong => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub n_train: usize,
    /// Total seasons on [0, 1].
    pub seasons: u32,
    /// Leading seasons in which training data is observed.
    pub observed_seasons: u32,
    pub label_drift: Strength,
    pub feature_drift: Strength,
    /// Slope of the residual variance 1 + variance_drift * t.
    pub variance_drift: f64,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            n_train: 500,
            seasons: 10,
            observed_seasons: 8,
            label_drift: Strength::None,
            feature_drift: Strength::None,
            variance_drift: 0.0,
        }
    }
}

impl DriftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seasons < 2 {
            return Err(Error::Simulation("need at least 2 seasons".into()));
        }
        if self.observed_seasons == 0 || self.observed_seasons > self.seasons {
            return Err(Error::Simulation(format!(
                "observed seasons {} must lie in 1..={}",
                self.observed_seasons, self.seasons
            )));
        }
        if self.n_train == 0 {
            return Err(Error::Simulation("n_train must be positive".into()));
        }
        // the variance is linear in t, so checking both ends covers [0, 1]
        if !(self.variance_drift.is_finite() && 1.0 + self.variance_drift > 0.0) {
            return Err(Error::Simulation(format!(
                "residual variance 1 + {} t is not positive on [0, 1]",
                self.variance_drift
            )));
        }
        Ok(())
    }

    /// End of the observation period as a time value.
    pub fn observed_end(&self) -> f64 {
        self.observed_seasons as f64 / self.seasons as f64
    }

    /// True-error timepoints: end of the observation period, then the middle
    /// and end of each of the next two seasons (capped at t = 1).
    pub fn timepoints(&self) -> Vec<(&'static str, f64)> {
        let s = self.seasons as f64;
        let o = self.observed_seasons as f64;
        let all = [("Els", o / s), ("M1fus", (o + 0.5) / s), ("E1fus", (o + 1.0) / s), ("M2fus", (o + 1.5) / s), ("E2fus", (o + 2.0) / s)];
        all.into_iter().filter(|(_, t)| *t <= 1.0 + 1e-12).collect()
    }
}

/// Emits observations from the drifting process at fixed time points.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftHandle {
    cfg: DriftConfig,
}

impl DriftHandle {
    pub fn config(&self) -> &DriftConfig {
        &self.cfg
    }

    /// `size` fresh rows at time `t`.
    pub fn sample_at(&self, t: f64, size: usize, seed: u64) -> Result<Dataset> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Simulation(format!("time {t} outside [0, 1]")));
        }
        if size == 0 {
            return Err(Error::Simulation("sample size must be positive".into()));
        }
        let mut r = rng::rng(seed);
        self.build(&vec![t; size], &mut r)
    }

    fn build(&self, times: &[f64], r: &mut rng::SimRng) -> Result<Dataset> {
        let c = &self.cfg;
        let (dy, dx) = (c.label_drift.slope(), c.feature_drift.slope());
        let p = DRIFT_BETA.len();
        let mut x = Vec::with_capacity(times.len() * p);
        let mut y = Vec::with_capacity(times.len());
        for &t in times {
            let row: Vec<f64> = (0..p)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(r);
                    if j < DRIFTING { dx * t + z } else { z }
                })
                .collect();
            let eps: f64 = StandardNormal.sample(r);
            let sd = (1.0 + c.variance_drift * t).sqrt();
            y.push(dy * t + row.iter().zip(DRIFT_BETA).map(|(a, b)| a * b).sum::<f64>() + sd * eps);
            x.extend(row);
        }
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        let seasons = times.iter().map(|&t| season_of(t, c.seasons)).collect();
        Dataset::new(names, x, Label::Real(y))?.with_time(times.to_vec())?.with_seasons(seasons)
    }
}

/// `n_train` rows with t uniform over the observed seasons, sorted by time,
/// plus a handle for future time points.
pub fn gen_drift(cfg: &DriftConfig, seed: u64) -> Result<(Dataset, DriftHandle)> {
    cfg.validate()?;
    let handle = DriftHandle { cfg: cfg.clone() };
    let mut r = rng::rng(seed);
    let end = cfg.observed_end();
    let mut times: Vec<f64> = (0..cfg.n_train).map(|_| r.random::<f64>() * end).collect();
    times.sort_by(f64::total_cmp);
    let d = handle.build(&times, &mut r)?;
    Ok((d, handle))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn observed_rows_cover_the_observed_seasons() {
        let (d, _) = gen_drift(&DriftConfig { n_train: 400, ..Default::default() }, 2).unwrap();
        let s = d.meta().season.as_ref().unwrap();
        assert_eq!(*s.iter().max().unwrap(), 8);
        assert_eq!(*s.iter().min().unwrap(), 1);
        assert!(d.meta().time.as_ref().unwrap().iter().all(|&t| (0.0..0.8).contains(&t)));
    }

    #[test]
    fn label_drift_shifts_the_mean() {
        let cfg = DriftConfig { label_drift: Strength::Strong, ..Default::default() };
        let (_, h) = gen_drift(&cfg, 1).unwrap();
        let m0 = mean(h.sample_at(0.0, 40_000, 5).unwrap().real_labels().unwrap());
        let m1 = mean(h.sample_at(1.0, 40_000, 6).unwrap().real_labels().unwrap());
        // sd of y is sqrt(10), so the difference of means has sd ~0.022
        assert!((m1 - m0 - 2.0).abs() < 0.1, "{}", m1 - m0);
    }

    #[test]
    fn timepoints_and_validation() {
        let tp = DriftConfig::default().timepoints();
        let ts: Vec<f64> = tp.iter().map(|x| x.1).collect();
        assert_eq!(tp.len(), 5);
        for (a, b) in ts.iter().zip([0.8, 0.85, 0.9, 0.95, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(DriftConfig { variance_drift: -1.0, ..Default::default() }.validate().is_err());
        assert!(DriftConfig { seasons: 1, observed_seasons: 1, ..Default::default() }.validate().is_err());
    }
}
