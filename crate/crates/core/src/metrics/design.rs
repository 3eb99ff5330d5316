//! Design-weighted loss estimators for samples drawn with unequal inclusion
//! probabilities.

use super::MetricResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDesign {
    pi: Vec<f64>,
    population_size: usize,
}

impl SamplingDesign {
    pub fn new(pi: Vec<f64>, population_size: usize) -> Result<Self> {
        if let Some(bad) = pi.iter().find(|p| !(p.is_finite() && **p > 0.0 && **p <= 1.0)) {
            return Err(Error::metric(format!("inclusion probability {bad} outside (0, 1]")));
        }
        if population_size < pi.len() {
            return Err(Error::metric(format!(
                "population size {population_size} is smaller than the sample size {}",
                pi.len()
            )));
        }
        Ok(SamplingDesign { pi, population_size })
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn population_size(&self) -> usize {
        self.population_size
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.pi.iter().map(|p| 1.0 / p).collect()
    }

    /// Design restricted to the rows in `idx`, same population size.
    pub fn subset(&self, idx: &[usize]) -> Result<SamplingDesign> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.pi.len()) {
            return Err(Error::metric(format!("row {bad} outside the design of {} units", self.pi.len())));
        }
        Ok(SamplingDesign { pi: idx.iter().map(|&i| self.pi[i]).collect(), population_size: self.population_size })
    }
}

fn check(losses: &[f64], design: &SamplingDesign) -> Result<()> {
    if losses.len() != design.len() {
        return Err(Error::metric(format!("{} losses but {} inclusion probabilities", losses.len(), design.len())));
    }
    if losses.is_empty() {
        return Err(Error::metric("no losses to weight"));
    }
    Ok(())
}

/// Horvitz-Thompson estimate of the population mean loss:
/// `(1/N) * sum_i L_i / pi_i`.
pub fn ht_loss(losses: &[f64], design: &SamplingDesign) -> Result<MetricResult> {
    check(losses, design)?;
    let total: f64 = losses.iter().zip(&design.pi).map(|(l, p)| l / p).sum();
    Ok(MetricResult::new("ht", total / design.population_size as f64).with_params(format!("N={}", design.population_size)))
}

/// Hajek estimate: `sum_i w_i L_i / sum_i w_i` with `w_i = 1/pi_i`.
pub fn hajek_loss(losses: &[f64], design: &SamplingDesign) -> Result<MetricResult> {
    check(losses, design)?;
    let (num, den) = losses
        .iter()
        .zip(&design.pi)
        .fold((0.0, 0.0), |(a, b), (l, p)| (a + l / p, b + 1.0 / p));
    if den <= 0.0 {
        return Err(Error::metric("design weights sum to zero"));
    }
    Ok(MetricResult::new("hajek", num / den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ht_hand_example() {
        let d = SamplingDesign::new(vec![0.5, 0.5], 4).unwrap();
        assert_eq!(ht_loss(&[1.0, 3.0], &d).unwrap().value, 2.0);
        assert_eq!(hajek_loss(&[1.0, 3.0], &d).unwrap().value, 2.0);
    }

    #[test]
    fn equal_probabilities_give_sample_mean() {
        let l = [0.3, 1.7, 2.2, 0.1, 5.0];
        let d = SamplingDesign::new(vec![0.05; 5], 100).unwrap();
        let mean = l.iter().sum::<f64>() / 5.0;
        assert!((ht_loss(&l, &d).unwrap().value - mean).abs() < 1e-12);
        assert!((hajek_loss(&l, &d).unwrap().value - mean).abs() < 1e-12);
    }

    #[test]
    fn invalid_designs_rejected() {
        assert!(SamplingDesign::new(vec![0.0, 0.5], 10).is_err());
        assert!(SamplingDesign::new(vec![1.5], 10).is_err());
        assert!(SamplingDesign::new(vec![0.5; 3], 2).is_err());
        let d = SamplingDesign::new(vec![0.5; 3], 6).unwrap();
        assert!(ht_loss(&[1.0, 2.0], &d).is_err());
    }
}
