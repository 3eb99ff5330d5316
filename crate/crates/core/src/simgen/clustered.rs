//! Linear model with random cluster intercepts and slopes.

use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::rng;

pub const CLUSTERED_BETA: [f64; 5] = [1.0, 1.0, -1.0, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    AllIid,
    X1ClusterConstant,
    X2ClusterConstant,
}

impl FeatureMode {
    /// Column held constant within clusters.
    fn constant_column(self) -> Option<usize> {
        match self {
            FeatureMode::AllIid => None,
            FeatureMode::X1ClusterConstant => Some(0),
            FeatureMode::X2ClusterConstant => Some(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteredConfig {
    #[serde(rename = "M")]
    pub m: usize,
    pub n_m: usize,
    pub sigma2: f64,
    pub sigma2_1: f64,
    pub sigma2_2: f64,
    pub feature_mode: FeatureMode,
}

impl Default for ClusteredConfig {
    fn default() -> Self {
        ClusteredConfig { m: 10, n_m: 10, sigma2: 0.25, sigma2_1: 1.0, sigma2_2: 1.0, feature_mode: FeatureMode::AllIid }
    }
}

impl ClusteredConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Simulation(format!("M = {} clusters, need at least 2", self.m)));
        }
        if self.n_m < 1 {
            return Err(Error::Simulation("n_m must be at least 1".into()));
        }
        for (name, v) in [("sigma2", self.sigma2), ("sigma2_1", self.sigma2_1), ("sigma2_2", self.sigma2_2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Simulation(format!("{name} = {v} must be a non-negative variance")));
            }
        }
        Ok(())
    }
}

fn normal(var: f64) -> Normal<f64> {
    Normal::new(0.0, var.sqrt()).expect("validated variance")
}

/// `M * n_m` rows, clusters contiguous, cluster ids 1..=M.
pub fn gen_clustered(cfg: &ClusteredConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let mut r = rng::rng(seed);
    let (eps, b1, b2) = (normal(cfg.sigma2), normal(cfg.sigma2_1), normal(cfg.sigma2_2));
    let p = CLUSTERED_BETA.len();
    let n = cfg.m * cfg.n_m;
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);
    let constant = cfg.feature_mode.constant_column();
    for m in 0..cfg.m {
        let (bm1, bm2) = (b1.sample(&mut r), b2.sample(&mut r));
        let shared: f64 = StandardNormal.sample(&mut r);
        for _ in 0..cfg.n_m {
            let row: Vec<f64> = (0..p)
                .map(|j| if Some(j) == constant { shared } else { StandardNormal.sample(&mut r) })
                .collect();
            let lin: f64 = row.iter().zip(CLUSTERED_BETA).map(|(a, b)| a * b).sum();
            y.push(lin + bm1 + bm2 * row[0] + eps.sample(&mut r));
            x.extend(row);
            ids.push(m as i64 + 1);
        }
    }
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    Dataset::new(names, x, Label::Real(y))?.with_cluster_ids(ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_free_reduces_to_linear_predictor() {
        let cfg = ClusteredConfig { sigma2: 0.0, sigma2_1: 0.0, sigma2_2: 0.0, ..Default::default() };
        let d = gen_clustered(&cfg, 3).unwrap();
        assert_eq!(d.n(), 100);
        let y = d.real_labels().unwrap();
        for i in 0..d.n() {
            let r = d.row(i);
            assert!((y[i] - (r[0] + r[1] - r[2])).abs() < 1e-12);
        }
    }

    #[test]
    fn cluster_constant_column() {
        for (mode, col) in [(FeatureMode::X1ClusterConstant, 0), (FeatureMode::X2ClusterConstant, 1)] {
            let cfg = ClusteredConfig { feature_mode: mode, ..Default::default() };
            let d = gen_clustered(&cfg, 1).unwrap();
            let ids = d.meta().cluster_id.as_ref().unwrap();
            for i in 1..d.n() {
                if ids[i] == ids[i - 1] {
                    assert_eq!(d.row(i)[col], d.row(i - 1)[col]);
                } else {
                    assert_ne!(d.row(i)[col], d.row(i - 1)[col]);
                }
            }
        }
    }

    #[test]
    fn invalid_config() {
        assert!(gen_clustered(&ClusteredConfig { m: 1, ..Default::default() }, 0).is_err());
        assert!(gen_clustered(&ClusteredConfig { sigma2: -1.0, ..Default::default() }, 0).is_err());
    }
}
