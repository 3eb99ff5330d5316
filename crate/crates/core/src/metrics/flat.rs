use std::collections::BTreeMap;

use super::{harmonic, Averaging, MetricResult, Prf};
use crate::error::{Error, Result};

fn check<T>(y: &[T], yhat: &[T]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::metric(format!("{} labels but {} predictions", y.len(), yhat.len())));
    }
    if y.is_empty() {
        return Err(Error::metric("no observations"));
    }
    Ok(())
}

pub fn accuracy<T: PartialEq>(y: &[T], yhat: &[T]) -> Result<MetricResult> {
    check(y, yhat)?;
    let hits = y.iter().zip(yhat).map(|(a, b)| if a == b { 1.0 } else { 0.0 }).collect();
    Ok(MetricResult::pointwise("accuracy", hits))
}

/// Flat precision, recall and F1. Macro precision averages over classes
/// predicted at least once, macro recall over classes present in `y`.
pub fn flat_prf(y: &[usize], yhat: &[usize], averaging: Averaging) -> Result<Prf> {
    check(y, yhat)?;
    let n = y.len() as f64;
    let hits = y.iter().zip(yhat).filter(|(a, b)| a == b).count() as f64;
    let (precision, recall) = match averaging {
        Averaging::Micro => (hits / n, hits / n),
        Averaging::Macro => {
            // class -> (true positives, predicted, actual)
            let mut c: BTreeMap<usize, (f64, f64, f64)> = BTreeMap::new();
            for (&a, &b) in y.iter().zip(yhat) {
                c.entry(a).or_default().2 += 1.0;
                c.entry(b).or_default().1 += 1.0;
                if a == b {
                    c.entry(a).or_default().0 += 1.0;
                }
            }
            let pr: Vec<f64> = c.values().filter(|v| v.1 > 0.0).map(|v| v.0 / v.1).collect();
            let re: Vec<f64> = c.values().filter(|v| v.2 > 0.0).map(|v| v.0 / v.2).collect();
            (pr.iter().sum::<f64>() / pr.len() as f64, re.iter().sum::<f64>() / re.len() as f64)
        }
    };
    Ok(Prf { precision, recall, f1: harmonic(precision, recall) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_confusion_example() {
        let (a, b) = (0, 1);
        let micro = flat_prf(&[a, a, b], &[a, b, b], Averaging::Micro).unwrap();
        assert!((micro.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((micro.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((micro.f1 - 2.0 / 3.0).abs() < 1e-15);
        let macro_ = flat_prf(&[a, a, b], &[a, b, b], Averaging::Macro).unwrap();
        assert!((macro_.precision - 0.75).abs() < 1e-15);
        assert!((macro_.recall - 0.75).abs() < 1e-15);
    }

    #[test]
    fn perfect_prediction() {
        let y = [3, 1, 4, 1, 5];
        for avg in [Averaging::Micro, Averaging::Macro] {
            assert_eq!(flat_prf(&y, &y, avg).unwrap(), Prf { precision: 1.0, recall: 1.0, f1: 1.0 });
        }
        assert_eq!(accuracy(&y, &y).unwrap().value, 1.0);
    }

    #[test]
    fn micro_equals_accuracy() {
        let y = [0, 1, 2, 2, 1, 0, 0];
        let yhat = [0, 2, 2, 1, 1, 0, 1];
        let acc = accuracy(&y, &yhat).unwrap().value;
        let m = flat_prf(&y, &yhat, Averaging::Micro).unwrap();
        assert_eq!(m.precision, acc);
        assert_eq!(m.recall, acc);
    }
}
