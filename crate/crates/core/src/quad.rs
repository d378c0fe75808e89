//! Gauss-Legendre quadrature, generic over the scalar type.
//!
//! Nodes and weights are generated at runtime by Newton iteration on the
//! Legendre polynomials; the n = 7 and n = 15 rules used by the oscillatory
//! panel engine are cached.

use crate::scalar::Real;
use num_complex::Complex;
use std::sync::OnceLock;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre<R: Real>(n: usize) -> (Vec<R>, Vec<R>) {
    assert!(n >= 1);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let nf = R::from_usize(n).unwrap();
    let one = R::one();
    let two = one + one;
    let pi = R::from_f64_lossy(std::f64::consts::PI);
    for i in 0..n {
        // Chebyshev initial guess, then Newton
        let k = R::from_usize(i).unwrap();
        let quarter = R::from_f64_lossy(0.25);
        let half = R::from_f64_lossy(0.5);
        let mut x = (pi * (k + one - quarter) / (nf + half)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x = x - dx;
            if dx.abs() <= R::epsilon() * (one + x.abs()) {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        let w = two / ((one - x * x) * dp * dp);
        nodes.push(-x); // ascending order
        weights.push(w);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_and_deriv<R: Real>(n: usize, x: R) -> (R, R) {
    let one = R::one();
    let (mut p0, mut p1) = (one, x);
    if n == 0 {
        return (one, R::zero());
    }
    for k in 1..n {
        let kf = R::from_usize(k).unwrap();
        let a = (R::from_usize(2 * k + 1).unwrap() * x * p1 - kf * p0)
            / R::from_usize(k + 1).unwrap();
        p0 = p1;
        p1 = a;
    }
    let dp = R::from_usize(n).unwrap() * (x * p1 - p0) / (x * x - one);
    (p1, dp)
}

/// Integrate a real function over [a, b] with one n-point panel.
pub fn integrate<R: Real>(f: impl Fn(R) -> R, a: R, b: R, n: usize) -> R {
    let (xs, ws) = gauss_legendre::<R>(n);
    let half = (b - a) / (R::one() + R::one());
    let mid = (a + b) / (R::one() + R::one());
    let mut acc = R::zero();
    for (x, w) in xs.iter().zip(ws.iter()) {
        acc += *w * f(mid + half * *x);
    }
    acc * half
}

/// Integrate a complex-valued function over [a, b] with one n-point panel.
pub fn integrate_complex<R: Real>(
    f: impl Fn(R) -> Complex<R>,
    a: R,
    b: R,
    n: usize,
) -> Complex<R> {
    let (xs, ws) = gauss_legendre::<R>(n);
    let half = (b - a) / (R::one() + R::one());
    let mid = (a + b) / (R::one() + R::one());
    let mut acc = Complex::new(R::zero(), R::zero());
    for (x, w) in xs.iter().zip(ws.iter()) {
        let v = f(mid + half * *x);
        acc = acc + Complex::new(*w * v.re, *w * v.im);
    }
    Complex::new(acc.re * half, acc.im * half)
}

/// Cached f64 rules for the panel engine: (nodes7, weights7, nodes15, weights15).
pub fn panel_rules() -> &'static (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULES.get_or_init(|| {
        let (x7, w7) = gauss_legendre::<f64>(7);
        let (x15, w15) = gauss_legendre::<f64>(15);
        (x7, w7, x15, w15)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        // GL-15 is exact through degree 29
        let val = integrate(|x: f64| x.powi(28), -1.0, 1.0, 15);
        assert!((val - 2.0 / 29.0).abs() < 1e-14, "val = {val}");
        let odd = integrate(|x: f64| x.powi(27), -1.0, 1.0, 15);
        assert!(odd.abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1usize, 2, 7, 15, 64] {
            let (_, w) = gauss_legendre::<f64>(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}, sum = {s}");
        }
    }

    #[test]
    fn f32_rule_is_consistent() {
        let v = integrate(|x: f32| x * x, 0.0f32, 1.0, 7);
        assert!((v - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn smooth_integral_converges() {
        let v = integrate(|x: f64| (-x).exp(), 0.0, 1.0, 15);
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }
}
