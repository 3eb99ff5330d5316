use crate::error::{Error, Result};

/// Relative rank tolerance on the diagonal of R.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn p(&self) -> usize {
        self.coefficients.len()
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    /// `x` is row-major with `p()` columns.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.p();
        if p == 0 || !x.len().is_multiple_of(p) {
            return Err(Error::fit(format!("feature matrix does not have {p} columns")));
        }
        Ok(x.chunks(p).map(|r| self.predict_row(r)).collect())
    }
}

/// Least squares with an intercept via Householder QR.
///
/// `x` is row-major `n x p`. Fails when `n <= p + 1` or when the design
/// (intercept column included) is rank deficient relative to the largest
/// column norm.
pub fn fit_ols(x: &[f64], p: usize, y: &[f64]) -> Result<LinearModel> {
    let n = y.len();
    if p == 0 || x.len() != n * p {
        return Err(Error::fit("design matrix shape does not match the label vector"));
    }
    if n <= p + 1 {
        return Err(Error::fit(format!("least squares needs n > p + 1 (n = {n}, p = {p})")));
    }
    let m = p + 1;
    // column-major design with leading intercept column
    let mut a = vec![0.0; n * m];
    for i in 0..n {
        a[i] = 1.0;
        for j in 0..p {
            a[(j + 1) * n + i] = x[i * p + j];
        }
    }
    let max_norm = (0..m)
        .map(|j| a[j * n..(j + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let mut b = y.to_vec();
    let mut diag = vec![0.0; m];
    for k in 0..m {
        let col = &a[k * n..(k + 1) * n];
        let norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= RANK_TOL * max_norm {
            return Err(Error::fit(format!("design matrix is rank deficient at column {k}")));
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = col[k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        diag[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..m {
            let cj = &mut a[j * n + k..(j + 1) * n];
            let s: f64 = v.iter().zip(cj.iter()).map(|(p, q)| p * q).sum::<f64>() * 2.0 / vnorm2;
            for (q, p) in cj.iter_mut().zip(&v) {
                *q -= s * p;
            }
        }
        let s: f64 = v.iter().zip(&b[k..]).map(|(p, q)| p * q).sum::<f64>() * 2.0 / vnorm2;
        for (q, p) in b[k..].iter_mut().zip(&v) {
            *q -= s * p;
        }
    }
    // back substitution on R (upper triangle of a, diagonal in `diag`)
    let mut beta = vec![0.0; m];
    for k in (0..m).rev() {
        let mut s = b[k];
        for j in k + 1..m {
            s -= a[j * n + k] * beta[j];
        }
        beta[k] = s / diag[k];
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::fit("least squares produced non-finite coefficients"));
    }
    Ok(LinearModel { intercept: beta[0], coefficients: beta[1..].to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn exact_linear_data() {
        let m = fit_ols(&[1.0, 2.0, 3.0], 1, &[2.0, 4.0, 6.0]).unwrap();
        assert!(m.intercept.abs() < 1e-12);
        assert!((m.coefficients[0] - 2.0).abs() < 1e-12);
        let m = fit_ols(&[1.0, 2.0, 3.0], 1, &[3.0, 5.0, 7.0]).unwrap();
        assert!((m.intercept - 1.0).abs() < 1e-12);
        assert!((m.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((m.predict_row(&[3.0]) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_and_shape_errors() {
        // second column duplicates the first
        let x = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0];
        assert!(fit_ols(&x, 2, &[1.0, 2.0, 3.0, 4.0]).is_err());
        // constant column collinear with the intercept
        let x = [5.0, 5.0, 5.0, 5.0];
        assert!(fit_ols(&x, 1, &[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(fit_ols(&[1.0, 2.0], 1, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn residuals_orthogonal_to_columns() {
        let mut r = crate::rng::rng(4);
        let (n, p) = (40, 3);
        let x: Vec<f64> = (0..n * p).map(|_| r.random::<f64>() * 4.0 - 2.0).collect();
        let y: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let m = fit_ols(&x, p, &y).unwrap();
        let res: Vec<f64> = (0..n).map(|i| y[i] - m.predict_row(&x[i * p..(i + 1) * p])).collect();
        let scale: f64 = y.iter().map(|v| v.abs()).sum();
        assert!(res.iter().sum::<f64>().abs() < 1e-8 * scale);
        for j in 0..p {
            let dot: f64 = (0..n).map(|i| res[i] * x[i * p + j]).sum();
            assert!(dot.abs() < 1e-8 * scale);
        }
    }
}
