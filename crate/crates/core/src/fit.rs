//! Least-squares line fits for rate and exponent estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 for data on a line.
    pub r_squared: f64,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares `y ≈ a + b·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a line fit needs two or more pairs, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite data in line fit".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("line fit abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LineFit { slope, intercept, r_squared })
}

/// Fit of `log y` against `log x`; the slope is the exponent of `y ≈ C·x^p`.
pub fn power_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("power fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Fit of `log y` against `x`; the slope is the rate of `y ≈ C·e^{s·x}`.
pub fn exponential_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if y.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("exponential fit needs positive data".into()));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(x, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert_eq!(f.eval(3.0), 7.0);
    }

    #[test]
    fn power_and_exponential() {
        let x = [10.0, 20.0, 40.0];
        let f = power_fit(&x, &x.map(|g: f64| 3.0 * g.sqrt())).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        let f = exponential_fit(&x, &x.map(|g: f64| (-0.25 * g).exp())).unwrap();
        assert!((f.slope + 0.25).abs() < 1e-12);
        assert!(power_fit(&[1.0, 2.0], &[1.0, 0.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }
}
