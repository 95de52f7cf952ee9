//! Small numerical helpers: log-domain sums, least squares, dense eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

/// log(e^a + e^b) with -inf as the additive identity.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn log_sum_exp<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let v: Vec<f64> = terms.into_iter().collect();
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    if hi == f64::INFINITY {
        return hi;
    }
    hi + v.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

/// Signed sum of terms given as (sign, log|term|). Returns (sign, log|sum|).
pub fn signed_log_sum(terms: &[(f64, f64)]) -> (f64, f64) {
    let hi = terms
        .iter()
        .map(|t| t.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return (0.0, f64::NEG_INFINITY);
    }
    let s: f64 = terms.iter().map(|(sg, l)| sg * (l - hi).exp()).sum();
    if s == 0.0 {
        (0.0, f64::NEG_INFINITY)
    } else {
        (s.signum(), hi + s.abs().ln())
    }
}

/// Ordinary least squares y = a + b x with the slope standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(x.len() >= 2, "need two points for a line");
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let slope_stderr = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - rss / syy };
    LineFit {
        intercept,
        slope,
        slope_stderr,
        r_squared,
    }
}

/// Least squares for y ≈ X β with a small design matrix; returns β.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let rows = design.len();
    let cols = design[0].len();
    let x = DMatrix::from_fn(rows, cols, |i, j| design[i][j]);
    let yv = nalgebra::DVector::from_column_slice(y);
    let svd = x.svd(true, true);
    let beta = svd.solve(&yv, 1e-12).expect("svd solve");
    beta.iter().copied().collect()
}

/// Ascending eigenvalues of a dense symmetric matrix.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Fixed-order pairwise sum, so reported digits do not depend on threading.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 16 => v.iter().sum(),
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct() {
        let a = 2.0f64.ln();
        let b = 3.0f64.ln();
        assert!((log_add(a, b) - 5.0f64.ln()).abs() < 1e-15);
        assert_eq!(log_add(f64::NEG_INFINITY, b), b);
        assert!((log_sum_exp([1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn signed_sum_cancels() {
        let (s, l) = signed_log_sum(&[(1.0, 3f64.ln()), (-1.0, 1f64.ln())]);
        assert_eq!(s, 1.0);
        assert!((l - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn exact_line_has_zero_stderr() {
        let x: Vec<f64> = (0..6).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 0.25 * v).collect();
        let fit = fit_line(&x, &y);
        assert!((fit.slope + 0.25).abs() < 1e-14);
        assert!(fit.slope_stderr < 1e-14);
        assert!((fit.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn least_squares_recovers_coefficients() {
        let design: Vec<Vec<f64>> = (1..8)
            .map(|r| vec![1.0, r as f64, (r as f64).ln()])
            .collect();
        let y: Vec<f64> = design.iter().map(|d| 2.0 + 0.5 * d[1] - 1.0 * d[2]).collect();
        let beta = least_squares(&design, &y);
        assert!((beta[0] - 2.0).abs() < 1e-10);
        assert!((beta[1] - 0.5).abs() < 1e-10);
        assert!((beta[2] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn eigenvalues_sorted() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let ev = symmetric_eigenvalues(m);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }
}
