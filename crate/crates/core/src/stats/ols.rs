use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Least-squares fit with per-coefficient inference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    pub std_err: Vec<f64>,
    pub t: Vec<f64>,
    /// Two-sided p-values from Student's t with `df` degrees of freedom.
    pub p_value: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub df: usize,
}

/// Fits `y ≈ X β` by Householder QR. `design` holds one row per
/// observation and must include the intercept column if one is wanted.
pub fn ols_fit(y: &[f64], design: &[Vec<f64>]) -> Result<OlsFit> {
    let n = y.len();
    if design.len() != n {
        return Err(Error::invalid("design rows must match observations"));
    }
    let p = design.first().map_or(0, |r| r.len());
    if p == 0 || design.iter().any(|r| r.len() != p) {
        return Err(Error::invalid(
            "design rows must have equal, non-zero length",
        ));
    }
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {p} coefficients"
        )));
    }
    if y.iter()
        .chain(design.iter().flatten())
        .any(|v| !v.is_finite())
    {
        return Err(Error::invalid("regression inputs must be finite"));
    }
    let x = DMatrix::from_fn(n, p, |i, j| design[i][j]);
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let rmax = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..p).any(|i| r[(i, i)].abs() <= 1e-10 * rmax) || rmax == 0.0 {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty.rows(0, p).into_owned())
        .ok_or(Error::RankDeficient)?;
    let resid = &yv - &x * &beta;
    let rss = resid.norm_squared();
    let df = n - p;
    let sigma2 = rss / df as f64;
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::RankDeficient)?;
    // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ, so the variances are the squared row norms of R⁻¹
    let std_err: Vec<f64> = (0..p)
        .map(|i| (sigma2 * rinv.row(i).norm_squared()).sqrt())
        .collect();
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("positive degrees of freedom");
    let mut t = Vec::with_capacity(p);
    let mut p_value = Vec::with_capacity(p);
    for i in 0..p {
        let (b, se) = (beta[i], std_err[i]);
        if se > 0.0 {
            let ti = b / se;
            t.push(ti);
            p_value.push((2.0 * dist.sf(ti.abs())).min(1.0));
        } else {
            // exact fit: a coefficient is either exactly zero or certain
            t.push(if b == 0.0 {
                0.0
            } else {
                b.signum() * f64::INFINITY
            });
            p_value.push(if b == 0.0 { 1.0 } else { 0.0 });
        }
    }
    Ok(OlsFit {
        beta: beta.iter().copied().collect(),
        std_err,
        t,
        p_value,
        residuals: resid.iter().copied().collect(),
        rss,
        df,
    })
}

/// Benjamini-Hochberg adjusted p-values in input order.
pub fn bh_correct(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).expect("finite p-values"));
    let mut out = vec![0.0; m];
    let mut running = f64::INFINITY;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(p[i] * m as f64 / (rank + 1) as f64);
        // round-off in p·m/rank must not push the result below p
        out[i] = running.max(p[i]).min(1.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bh_examples() {
        assert_eq!(bh_correct(&[0.01, 0.02, 0.03, 0.04]), vec![0.04; 4]);
        assert_eq!(bh_correct(&[1.0, 1.0]), vec![1.0, 1.0]);
        assert_eq!(bh_correct(&[0.3]), vec![0.3]);
        let adj = bh_correct(&[0.04, 0.001, 0.5]);
        for (a, e) in adj.iter().zip([0.06, 0.003, 0.5]) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn intercept_only_is_the_mean() {
        let y = [1.0, 2.0, 4.0, 9.0];
        let x: Vec<Vec<f64>> = vec![vec![1.0]; 4];
        let f = ols_fit(&y, &x).unwrap();
        assert!((f.beta[0] - 4.0).abs() < 1e-14);
        assert_eq!(f.df, 3);
    }

    #[test]
    fn exact_linear_fit() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| 2.5 - 0.75 * i as f64).collect();
        let f = ols_fit(&y, &x).unwrap();
        assert!((f.beta[0] - 2.5).abs() < 1e-13 && (f.beta[1] + 0.75).abs() < 1e-13);
        assert!(f.rss < 1e-18);
    }

    #[test]
    fn collinear_design() {
        let x: Vec<Vec<f64>> = (0..5)
            .map(|i| vec![1.0, i as f64, 2.0 * i as f64])
            .collect();
        let y = [1.0, 2.0, 3.0, 5.0, 4.0];
        assert!(matches!(ols_fit(&y, &x), Err(Error::RankDeficient)));
    }
}
