//! Finite population with skewed labels, sampled proportional to an
//! auxiliary size variable.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::metrics::SamplingDesign;
use crate::rng::{self, SimRng};

pub const NSRS_INTERCEPT: f64 = 5.0;
pub const NSRS_BETA: [f64; 5] = [1.0, 1.0, 0.0, 0.0, 0.0];
const GAMMA_SHAPE: f64 = 0.1;
const GAMMA_RATE: f64 = 0.1;
/// Value assigned to inclusion probabilities that reach 1.
const PI_CAP: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NsrsConfig {
    #[serde(rename = "N")]
    pub population: usize,
    /// Sample size; N / 100 when absent.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub misspecified: bool,
}

impl Default for NsrsConfig {
    fn default() -> Self {
        NsrsConfig { population: 10_000, n: None, misspecified: false }
    }
}

impl NsrsConfig {
    pub fn sample_size(&self) -> usize {
        self.n.unwrap_or(self.population / 100)
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 100 {
            return Err(Error::Simulation(format!("N = {} is below 100", self.population)));
        }
        let n = self.sample_size();
        if n == 0 || n >= self.population {
            return Err(Error::Simulation(format!("sample size {n} must lie in 1..N")));
        }
        Ok(())
    }
}

struct Rows {
    x: Vec<f64>,
    y: Vec<f64>,
}

fn draw_rows(size: usize, r: &mut SimRng) -> Rows {
    let gamma = Gamma::new(GAMMA_SHAPE, 1.0 / GAMMA_RATE).expect("valid gamma parameters");
    let p = NSRS_BETA.len();
    let mut x = Vec::with_capacity(size * p);
    let mut y = Vec::with_capacity(size);
    for _ in 0..size {
        let row = [
            gamma.sample(r),
            gamma.sample(r),
            StandardNormal.sample(r),
            StandardNormal.sample(r),
            StandardNormal.sample(r),
        ];
        let eps: f64 = StandardNormal.sample(r);
        y.push(NSRS_INTERCEPT + row.iter().zip(NSRS_BETA).map(|(a, b)| a * b).sum::<f64>() + eps);
        x.extend(row);
    }
    Rows { x, y }
}

fn to_dataset(rows: Rows, misspecified: bool) -> Result<Dataset> {
    let names = (1..=NSRS_BETA.len()).map(|j| format!("x{j}")).collect();
    let d = Dataset::new(names, rows.x, Label::Real(rows.y))?;
    if misspecified {
        d.drop_feature(1)
    } else {
        Ok(d)
    }
}

/// Inclusion probabilities `n * u_i / sum(u)`. Values reaching 1 are capped
/// just below 1 and the remaining probabilities rescaled to keep the sum
/// at `n`.
pub fn pps_probabilities(u: &[f64], n: usize) -> Result<Vec<f64>> {
    if u.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Simulation("size variable must be strictly positive".into()));
    }
    let total: f64 = u.iter().sum();
    let mut pi: Vec<f64> = u.iter().map(|v| n as f64 * v / total).collect();
    let mut capped = vec![false; pi.len()];
    for _ in 0..pi.len() {
        let over: Vec<usize> = (0..pi.len()).filter(|&i| !capped[i] && pi[i] >= 1.0).collect();
        if over.is_empty() {
            return Ok(pi);
        }
        log::warn!("{} inclusion probabilities reached 1 and were capped", over.len());
        for i in over {
            capped[i] = true;
            pi[i] = PI_CAP;
        }
        let fixed: f64 = (0..pi.len()).filter(|&i| capped[i]).map(|i| pi[i]).sum();
        let free: f64 = (0..pi.len()).filter(|&i| !capped[i]).map(|i| pi[i]).sum();
        let scale = (n as f64 - fixed) / free;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Simulation("cannot keep inclusion probabilities below 1".into()));
        }
        for i in 0..pi.len() {
            if !capped[i] {
                pi[i] *= scale;
            }
        }
    }
    Err(Error::Simulation("inclusion probability truncation did not converge".into()))
}

/// Population of N rows with its PPS design. The returned dataset carries
/// the inclusion probabilities and population size as metadata.
pub fn gen_nsrs_population(cfg: &NsrsConfig, seed: u64) -> Result<(Dataset, SamplingDesign)> {
    cfg.validate()?;
    let mut r = rng::rng(seed);
    let rows = draw_rows(cfg.population, &mut r);
    let u: Vec<f64> = rows
        .y
        .iter()
        .map(|&y| loop {
            let z: f64 = StandardNormal.sample(&mut r);
            if y + z > 0.0 {
                break y + z;
            }
        })
        .collect();
    let pi = pps_probabilities(&u, cfg.sample_size())?;
    let design = SamplingDesign::new(pi.clone(), cfg.population)?;
    let d = to_dataset(rows, cfg.misspecified)?
        .with_inclusion_prob(pi)?
        .with_population_size(cfg.population)?;
    Ok((d, design))
}

/// Independent draws from the population model (no design), used as test
/// data for the true generalization error.
pub fn gen_nsrs_superpopulation(cfg: &NsrsConfig, size: usize, seed: u64) -> Result<Dataset> {
    if size == 0 {
        return Err(Error::Simulation("test size must be positive".into()));
    }
    to_dataset(draw_rows(size, &mut rng::rng(seed)), cfg.misspecified)
}

/// Fixed-size PPS sample without replacement: systematic sampling over a
/// uniformly random ordering of the units. Returns sorted unit indices.
pub fn draw_pps_sample(design: &SamplingDesign, seed: u64) -> Result<Vec<usize>> {
    let pi = design.pi();
    let total: f64 = pi.iter().sum();
    let n = total.round() as usize;
    if n == 0 || (total - n as f64).abs() > 1e-6 * (n as f64).max(1.0) {
        return Err(Error::Simulation(format!("inclusion probabilities sum to {total}, not an integer sample size")));
    }
    let mut r = rng::rng(seed);
    let mut order: Vec<usize> = (0..pi.len()).collect();
    order.shuffle(&mut r);
    let step = total / n as f64;
    let start: f64 = r.random::<f64>() * step;
    let mut picked = Vec::with_capacity(n);
    let mut cum = 0.0;
    let mut next = start;
    for &i in &order {
        cum += pi[i];
        if picked.len() < n && next < cum {
            picked.push(i);
            next = start + picked.len() as f64 * step;
        }
    }
    if picked.len() != n {
        return Err(Error::Simulation(format!("systematic sampling selected {} of {n} units", picked.len())));
    }
    picked.sort_unstable();
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_properties() {
        let cfg = NsrsConfig { population: 2000, ..Default::default() };
        let (d, design) = gen_nsrs_population(&cfg, 4).unwrap();
        assert_eq!(d.n(), 2000);
        assert_eq!(design.population_size(), 2000);
        assert!((design.pi().iter().sum::<f64>() - 20.0).abs() < 1e-9);
        assert_eq!(d.meta().inclusion_prob.as_deref(), Some(design.pi()));
        let mis = gen_nsrs_population(&NsrsConfig { misspecified: true, ..cfg.clone() }, 4).unwrap().0;
        assert_eq!(mis.p(), 4);
        assert_eq!(mis.feature_names(), ["x1", "x3", "x4", "x5"]);
        assert_eq!(mis.label(), d.label());
    }

    #[test]
    fn capping_keeps_the_sample_size() {
        let u = [100.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let pi = pps_probabilities(&u, 2).unwrap();
        assert!(pi.iter().all(|&p| p < 1.0));
        assert!((pi.iter().sum::<f64>() - 2.0).abs() < 1e-9);
        assert!((pi[0] - PI_CAP).abs() < 1e-15);
    }

    #[test]
    fn pps_sample_has_fixed_size() {
        let design = SamplingDesign::new(vec![0.8, 0.8, 0.2, 0.2], 4).unwrap();
        for s in 0..50 {
            let idx = draw_pps_sample(&design, s).unwrap();
            assert_eq!(idx.len(), 2);
            assert!(idx.windows(2).all(|w| w[0] < w[1]));
        }
        let bad = SamplingDesign::new(vec![0.5, 0.7], 4).unwrap();
        assert!(draw_pps_sample(&bad, 0).is_err());
    }
}
