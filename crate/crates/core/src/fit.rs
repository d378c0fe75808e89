//! Ordinary least squares on log-log data, used for every scaling-exponent
//! measurement in the crate.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Result of a straight-line fit y = slope * x + intercept.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct LineFit<R> {
    pub slope: R,
    pub intercept: R,
    pub residual_rms: R,
    pub slope_stderr: R,
    pub points_used: usize,
}

/// Least-squares line through (x_i, y_i).
pub fn line_fit<R: Real>(xs: &[R], ys: &[R]) -> Result<LineFit<R>> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter("mismatched fit input lengths".into()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 points for a slope fit, got {n}"
        )));
    }
    let nf = R::from_usize(n).unwrap();
    let mean = |v: &[R]| v.iter().copied().sum::<R>() / nf;
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxx = R::zero();
    let mut sxy = R::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= R::zero() {
        return Err(Error::InvalidParameter("degenerate abscissae in fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ssr = R::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (slope * x + intercept);
        ssr += r * r;
    }
    let residual_rms = (ssr / nf).sqrt();
    let dof = R::from_usize(n.saturating_sub(2).max(1)).unwrap();
    let slope_stderr = (ssr / dof / sxx).sqrt();
    Ok(LineFit { slope, intercept, residual_rms, slope_stderr, points_used: n })
}

/// Fit log(y) = slope * log(x) + c. Non-positive samples are dropped; the
/// returned `points_used` reflects what survived.
pub fn log_log_fit<R: Real>(xs: &[R], ys: &[R]) -> Result<LineFit<R>> {
    let mut lx = Vec::with_capacity(xs.len());
    let mut ly = Vec::with_capacity(ys.len());
    for (&x, &y) in xs.iter().zip(ys) {
        if x > R::zero() && y > R::zero() {
            lx.push(x.ln());
            ly.push(y.ln());
        }
    }
    line_fit(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_power_law_is_recovered_exactly() {
        let xs: Vec<f64> = (1..12).map(|k| 2f64.powi(-k)).collect();
        let ys: Vec<f64> = xs.iter().map(|h| h.powf(0.3)).collect();
        let fit = log_log_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 0.3).abs() < 1e-10, "slope = {}", fit.slope);
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn noisy_power_law_within_three_stderr() {
        // deterministic LCG noise, 5% multiplicative
        let mut state: u64 = 0x9e3779b97f4a7c15;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let xs: Vec<f64> = (1..30).map(|k| 0.7f64.powi(k)).collect();
        let ys: Vec<f64> = xs.iter().map(|h| h.powf(0.42) * (1.0 + 0.05 * next())).collect();
        let fit = log_log_fit(&xs, &ys).unwrap();
        assert!(
            (fit.slope - 0.42).abs() <= 3.0 * fit.slope_stderr,
            "slope = {}, stderr = {}",
            fit.slope,
            fit.slope_stderr
        );
    }

    #[test]
    fn two_points_is_an_error() {
        assert!(log_log_fit(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_samples_are_dropped() {
        let xs = [1.0, 0.5, 0.25, 0.125, 0.0625];
        let ys = [1.0, 0.0, 0.25, 0.125, 0.0625];
        let fit = log_log_fit(&xs, &ys).unwrap();
        assert_eq!(fit.points_used, 4);
    }
}
