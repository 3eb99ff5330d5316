use super::MetricResult;
use crate::error::{Error, Result};

fn check(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::metric(format!("{} labels but {} predictions", y.len(), yhat.len())));
    }
    if y.is_empty() {
        return Err(Error::metric("no observations"));
    }
    Ok(())
}

pub fn squared_errors(y: &[f64], yhat: &[f64]) -> Result<Vec<f64>> {
    check(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).collect())
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<MetricResult> {
    Ok(MetricResult::pointwise("mse", squared_errors(y, yhat)?))
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<MetricResult> {
    check(y, yhat)?;
    Ok(MetricResult::pointwise("mae", y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap().value, 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, -1.0]).unwrap().value, 1.0);
        assert_eq!(mae(&[0.0, 0.0], &[3.0, -1.0]).unwrap().value, 2.0);
        assert!(mse(&[0.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }
}
