//! Oscillatory integrals, the stationary-phase approximation of the
//! windowed transforms, the Gauss-sum tail
//!
//!     G_{s,N}(h) = (2hq)^{s-1/2} e^{i pi/4}
//!                  sum_{m=1}^{floor(2Nhq)} (theta_m / m^s) e^{-i pi m^2/(2 q^2 h)},
//!
//! and the accelerated evaluation of dyadic blocks
//!
//!     F_{s,2N}(p/q+h) - F_{s,N}(p/q+h)
//!       = (theta_0/sqrt(q)) int_N^{2N} e^{2 pi i h t^2} t^{-s} dt
//!         + G_{s,2N}(h) - G_{s,N}(h) + O(N^{1/2-s} log q)
//!
//! and of short difference increments near rationals.

use crate::config::Calibration;
use crate::error::{Error, Result};
use crate::gauss::{theta_cached, GaussTheta};
use crate::quad::panel_rules;
use crate::scalar::{unit_phase, Dd};
use crate::series::{ComplexValue, PointDecomposition};
use crate::window::Window;
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::sync::Arc;

const Z: Complex64 = Complex64::new(0.0, 0.0);

/// Quadrature strategy for `oscillatory_integral`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OscMethod {
    /// Phase-limited Gauss-Legendre panels over the whole range.
    PanelQuadrature,
    /// Two integrations by parts; the remainder integral is evaluated
    /// numerically when its a-priori bound is not negligible.
    IbpAsymptotic,
    /// Panels when cheap, panels-then-boundary-terms split otherwise.
    Auto,
}

/// int_a^b e^{2 pi i h t^2} t^{-s} dt.
#[derive(Clone, Copy, Debug)]
pub struct OscIntegralSpec {
    pub s: f64,
    pub h: Dd,
    pub a: f64,
    pub b: f64,
    pub method: OscMethod,
}

/// Panel budget past which `Auto` abandons pure panel quadrature.
const AUTO_PANEL_CAP: usize = 100_000;
/// Hard cap for explicitly requested panel quadrature.
const HARD_PANEL_CAP: usize = 2_000_000;
/// Phase (radians) at the panel/boundary-term split point of `Auto`.
const SPLIT_PHASE: f64 = 64.0;
/// Phase change allowed within one 15-node panel.
const MAX_PANEL_PHASE: f64 = 4.0;

pub fn oscillatory_integral(spec: &OscIntegralSpec) -> Result<ComplexValue> {
    let OscIntegralSpec { s, h, a, b, method } = *spec;
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "oscillatory integral needs a > 0 (stationary point at 0), got a = {a}"
        )));
    }
    if b < a {
        return Err(Error::InvalidParameter(format!("empty range [{a}, {b}]")));
    }
    if b == a {
        return Ok(ComplexValue { value: Z, err: 0.0 });
    }
    if h.is_zero() {
        let value = if s == 1.0 {
            Complex64::new((b / a).ln(), 0.0)
        } else {
            Complex64::new((b.powf(1.0 - s) - a.powf(1.0 - s)) / (1.0 - s), 0.0)
        };
        return Ok(ComplexValue { value, err: value.norm() * 1e-15 });
    }
    if h.is_sign_negative() {
        let conj_spec = OscIntegralSpec { h: -h, ..*spec };
        let r = oscillatory_integral(&conj_spec)?;
        return Ok(ComplexValue { value: r.value.conj(), err: r.err });
    }

    let hf = h.to_f64();
    match method {
        OscMethod::PanelQuadrature => {
            let (v, e) = osc_panels(s, h, a, b, HARD_PANEL_CAP)?;
            Ok(ComplexValue { value: v, err: e })
        }
        OscMethod::IbpAsymptotic => {
            let (v, bound) = ibp_boundary(s, h, a, b);
            // evaluate the remainder integral when its bound matters
            let scale = v.norm().max(1e-300);
            if bound > 1e-14 * scale {
                let cnt = panel_count_estimate(s, hf, a, b);
                if cnt <= HARD_PANEL_CAP {
                    let (r, re) = osc_panels(s + 4.0, h, a, b, HARD_PANEL_CAP)?;
                    let factor = remainder_factor(s, hf);
                    let v2 = v + factor * r;
                    return Ok(ComplexValue { value: v2, err: re * factor.norm() + v2.norm() * 1e-14 });
                }
            }
            Ok(ComplexValue { value: v, err: bound })
        }
        OscMethod::Auto => {
            let cnt = panel_count_estimate(s, hf, a, b);
            if cnt <= AUTO_PANEL_CAP {
                let (v, e) = osc_panels(s, h, a, b, HARD_PANEL_CAP)?;
                return Ok(ComplexValue { value: v, err: e });
            }
            let t_star = (SPLIT_PHASE / (TAU * hf)).sqrt().clamp(a, b);
            let mut value = Z;
            let mut err = 0.0;
            if t_star > a {
                let (v, e) = osc_panels(s, h, a, t_star, HARD_PANEL_CAP)?;
                value += v;
                err += e;
            }
            if t_star < b {
                let (v, bound) = ibp_boundary(s, h, t_star, b);
                value += v;
                err += bound;
            }
            Ok(ComplexValue { value, err })
        }
    }
}

fn panel_count_estimate(s: f64, hf: f64, a: f64, b: f64) -> usize {
    let oscillation = TAU * hf * (b * b - a * a) / MAX_PANEL_PHASE;
    let algebraic = if s.abs() > 1e-12 { (b / a).ln() / 1.5f64.ln() } else { 1.0 };
    (oscillation + algebraic + 2.0).min(usize::MAX as f64 / 2.0) as usize
}

/// Phase-limited panels with anchored double-double phases: within a panel
/// starting at t0 the phase is split as h t^2 = h t0^2 + h (t-t0)(t+t0);
/// the first part is reduced mod 1 in double-double, the second stays below
/// 1/8 of a turn and is safe in f64.
fn osc_panels(s: f64, h: Dd, a: f64, b: f64, cap: usize) -> Result<(Complex64, f64)> {
    let hf = h.to_f64();
    let (x7, w7, x15, w15) = panel_rules();
    // 15-node Gauss handles ~4 radians of phase per panel at ~1e-20
    let dt2 = if hf > 0.0 { MAX_PANEL_PHASE / (TAU * hf) } else { f64::INFINITY };
    let mut t0 = a;
    let mut acc = Z;
    let mut err = 0.0f64;
    let mut panels = 0usize;
    while t0 < b {
        let t_phase = (t0 * t0 + dt2).sqrt();
        let mut t1 = (1.5 * t0).min(t_phase).min(b);
        if t1 <= t0 {
            t1 = (t0 + t0 * 1e-14 + 1e-300).min(b);
        }
        panels += 1;
        if panels > cap {
            return Err(Error::RegimeRefused(format!(
                "oscillatory panel budget exceeded ({cap} panels) on [{a}, {b}]"
            )));
        }
        let anchor = unit_phase(h * Dd::from_f64(t0) * Dd::from_f64(t0));
        let half = 0.5 * (t1 - t0);
        let mid = 0.5 * (t0 + t1);
        let eval = |x: f64| -> Complex64 {
            let t = mid + half * x;
            let local = TAU * (hf * (t - t0) * (t + t0));
            let (si, co) = local.sin_cos();
            let amp = t.powf(-s);
            Complex64::new(amp * co, amp * si)
        };
        let mut i15 = Z;
        for (x, w) in x15.iter().zip(w15.iter()) {
            i15 += *w * eval(*x);
        }
        let mut i7 = Z;
        for (x, w) in x7.iter().zip(w7.iter()) {
            i7 += *w * eval(*x);
        }
        acc += anchor * (half * i15);
        err += (i15 - i7).norm() * half.abs();
        t0 = t1;
    }
    Ok((acc, err + acc.norm() * 1e-15))
}

/// (s+1)(s+3)/(4 pi i h)^2 — the factor in front of the remainder integral
/// after two integrations by parts.
fn remainder_factor(s: f64, hf: f64) -> Complex64 {
    let denom = Complex64::new(0.0, 4.0 * PI * hf);
    Complex64::new((s + 1.0) * (s + 3.0), 0.0) / (denom * denom)
}

/// Boundary terms of two integrations by parts plus the remainder bound:
///
///   int = [ e^{2 pi i h t^2} ( t^{-s-1}/(4 pi i h) + (s+1) t^{-s-3}/(4 pi i h)^2 ) ]_a^b + R,
///   |R| <= (s+1) a^{-s-3} / (16 pi^2 h^2).
fn ibp_boundary(s: f64, h: Dd, a: f64, b: f64) -> (Complex64, f64) {
    let hf = h.to_f64();
    let inv = Complex64::new(0.0, -1.0 / (4.0 * PI * hf)); // 1/(4 pi i h)
    let inv2 = inv * inv;
    let term = |t: f64| -> Complex64 {
        let e = unit_phase(h * Dd::from_f64(t) * Dd::from_f64(t));
        e * (inv * t.powf(-s - 1.0) + inv2 * ((s + 1.0) * t.powf(-s - 3.0)))
    };
    let v = term(b) - term(a);
    let bound = (s + 1.0) * a.powf(-s - 3.0) / (16.0 * PI * PI * hf * hf);
    (v, bound)
}

/// Windowed quadratic-phase transform
/// w_hat_R(xi) = int psi(t) e^{2 pi i (R t^2 - xi t)} dt over the window
/// support, by phase-limited panels to ~1e-12 absolute.
pub fn w_hat(r: f64, xi: f64, w: Window) -> Result<ComplexValue> {
    w_hat_weighted(r, xi, w, 0.0)
}

/// As `w_hat` with the algebraically weighted window t^{-s} psi(t) — the
/// shape the summation formulas actually transform.
pub fn w_hat_weighted(r: f64, xi: f64, w: Window, s: f64) -> Result<ComplexValue> {
    if !w.is_smooth() {
        return Err(Error::RegimeRefused(
            "sharp indicator window rejected: transform needs a smooth cutoff".into(),
        ));
    }
    let (lo, hi) = w.support();
    let (x7, w7, x15, w15) = panel_rules();
    let mut t0 = lo;
    let mut acc = Z;
    let mut err = 0.0f64;
    let mut panels = 0usize;
    let slope_bound = |t: f64| (2.0 * r * t - xi).abs() + r.abs().sqrt() + 1.0;
    while t0 < hi {
        let width = (MAX_PANEL_PHASE / (TAU * slope_bound(t0))).min(0.05).max(1e-9);
        let t1 = (t0 + width).min(hi);
        panels += 1;
        if panels > 300_000 {
            return Err(Error::RegimeRefused("window transform panel budget exceeded".into()));
        }
        let half = 0.5 * (t1 - t0);
        let mid = 0.5 * (t0 + t1);
        let eval = |x: f64| -> Complex64 {
            let t = mid + half * x;
            let phase = TAU * (r * t * t - xi * t);
            let (si, co) = phase.sin_cos();
            let mut amp = w.eval_f64(t);
            if s != 0.0 && amp != 0.0 {
                amp *= t.powf(-s);
            }
            Complex64::new(amp * co, amp * si)
        };
        let mut i15 = Z;
        for (x, wt) in x15.iter().zip(w15.iter()) {
            i15 += *wt * eval(*x);
        }
        let mut i7 = Z;
        for (x, wt) in x7.iter().zip(w7.iter()) {
            i7 += *wt * eval(*x);
        }
        acc += half * i15;
        err += (i15 - i7).norm() * half;
        t0 = t1;
    }
    Ok(ComplexValue { value: acc, err: err + 1e-15 })
}

/// Stationary-phase principal term of `w_hat`:
/// g_R(xi) = e^{i pi/4} e^{-i pi xi^2/(2R)} / sqrt(2R) * psi(xi/(2R)).
pub fn g_stationary(r: f64, xi: f64, w: Window) -> Complex64 {
    g_stationary_weighted(r, xi, w, 0.0)
}

/// Principal term for the weighted window t^{-s} psi(t).
pub fn g_stationary_weighted(r: f64, xi: f64, w: Window, s: f64) -> Complex64 {
    debug_assert!(r > 0.0);
    let arg = xi / (2.0 * r);
    let mut amp = w.eval_f64(arg);
    if amp == 0.0 {
        return Z;
    }
    if s != 0.0 {
        amp *= arg.powf(-s);
    }
    // e^{-i pi xi^2/(2R)} = e^{2 pi i * (-xi^2/(4R))}
    let chi = Dd::from_f64(xi) * Dd::from_f64(xi) / Dd::from_f64(4.0 * r);
    let rot = unit_phase(-chi);
    let pref = Complex64::from_polar(1.0 / (2.0 * r).sqrt(), FRAC_PI_4);
    pref * rot * amp
}

/// Number of terms in the Gauss tail sum: floor(2 N h q).
pub fn big_g_terms(n: f64, q: u64, h: Dd) -> u64 {
    let c = h.mul_f64(2.0 * n * q as f64);
    let f = c.floor().to_f64();
    if f < 1.0 {
        0
    } else {
        f as u64
    }
}

/// The Gauss tail G_{s,N}(h) for the reduced fraction p/q, h > 0. Empty
/// (zero) whenever 2 N h q < 1. Phases m^2/(2 q^2 h) are reduced mod 2 in
/// double-double before exponentiation.
pub fn big_g(s: f64, n: f64, p: i64, q: u64, h: Dd) -> Result<Complex64> {
    if !(h > Dd::ZERO) {
        return Err(Error::InvalidParameter("gauss tail needs h > 0".into()));
    }
    let count = big_g_terms(n, q, h);
    if count == 0 {
        return Ok(Z);
    }
    if count > 50_000_000 {
        return Err(Error::RegimeRefused(format!("gauss tail with {count} terms refused")));
    }
    if q > 2_000_000 {
        return Err(Error::RegimeRefused(format!("theta table for q = {q} too large")));
    }
    let theta = theta_cached(p, q)?;
    Ok(big_g_with(&theta, s, count, q, h))
}

fn big_g_with(theta: &GaussTheta, s: f64, count: u64, q: u64, h: Dd) -> Complex64 {
    let hf = h.to_f64();
    let pref = Complex64::from_polar((2.0 * hf * q as f64).powf(s - 0.5), FRAC_PI_4);
    // e^{-i pi m^2/(2 q^2 h)} = e^{2 pi i * (-m^2 / (4 q^2 h))}
    let denom = Dd::from_u128(4 * (q as u128) * (q as u128)) * h;
    let mut acc = Z;
    for m in 1..=count {
        let chi = Dd::from_u128((m as u128) * (m as u128)) / denom;
        let rot = unit_phase(-chi);
        let w = theta.theta((m % q) as i64) * (m as f64).powf(-s);
        acc += w * rot;
    }
    pref * acc
}

/// Result of the accelerated dyadic-block evaluation.
#[derive(Clone, Copy, Debug)]
pub struct FastBlockResult {
    /// Fresnel main term theta_0/sqrt(q) * int_N^{2N} e^{2 pi i h t^2} t^{-s} dt.
    pub main: Complex64,
    /// Gauss tail difference G_{s,2N}(h) - G_{s,N}(h); zero when 2Nhq < 1.
    pub tail: Complex64,
    /// Sharp-cutoff boundary corrections: the half-weight lattice-edge
    /// terms plus, in the resonance-free regime 4Nhq < 1/2, the exact
    /// first-order boundary sums of the class-lattice expansion.
    pub edge: Complex64,
    /// Error model kappa * N^{1/2-s} * max(1, ln q).
    pub err_model: f64,
}

impl FastBlockResult {
    pub fn value(&self) -> Complex64 {
        self.main + self.tail + self.edge
    }
}

/// Accelerated evaluation of F_{s,2N}(p/q + h) - F_{s,N}(p/q + h) for
/// 4N >= q and |h| <= 1/q (the dyadic-window regime q_j <= 4N used by the
/// convergence analysis). Negative offsets go through the reflection
/// F_s(p/q - h) = conj(F_s(-p/q + h)).
pub fn fast_block(
    s: f64,
    n: u64,
    p: i64,
    q: u64,
    h: Dd,
    calib: &Calibration,
) -> Result<FastBlockResult> {
    if q == 0 || 4 * n < q {
        return Err(Error::RegimeRefused(format!(
            "block formula needs 4N >= q (N = {n}, q = {q})"
        )));
    }
    if h.abs() > Dd::from_f64(1.0 / q as f64).mul_f64(1.0 + 1e-12) {
        return Err(Error::RegimeRefused(format!(
            "block formula needs |h| <= 1/q (|h| = {:e}, q = {q})",
            h.abs().to_f64()
        )));
    }
    if h.is_sign_negative() && !h.is_zero() {
        let refl = fast_block(s, n, -p, q, -h, calib)?;
        return Ok(FastBlockResult {
            main: refl.main.conj(),
            tail: refl.tail.conj(),
            edge: refl.edge.conj(),
            err_model: refl.err_model,
        });
    }

    let theta = theta_cached(p, q)?;
    let spec = OscIntegralSpec { s, h, a: n as f64, b: 2.0 * n as f64, method: OscMethod::Auto };
    let fresnel = oscillatory_integral(&spec)?;
    let main = theta.theta0() / (q as f64).sqrt() * fresnel.value;

    let tail = if h.is_zero() {
        Z
    } else {
        let g2 = big_g_cached(&theta, s, 2.0 * n as f64, q, h);
        let g1 = big_g_cached(&theta, s, n as f64, q, h);
        g2 - g1
    };

    let d = PointDecomposition::new_raw(p, q, h);
    let f = |m: u64| -> Complex64 {
        let phase = crate::series::reduce_phase(m, &d);
        unit_phase(phase) * (m as f64).powf(-s)
    };
    let mut edge = 0.5 * (f(2 * n) - f(n));

    // exact first-order boundary sums, valid while no resonance sits at
    // either cutoff (z = 2 T h q stays below 1/2 for T = N, 2N)
    let z2 = h.mul_f64(4.0 * (n as f64) * q as f64).to_f64();
    if z2 < 0.49 {
        edge += lattice_boundary(s, 2 * n, p, q, h) - lattice_boundary(s, n, p, q, h);
    }

    let err_model =
        calib.err_kappa * (n as f64).powf(0.5 - s) * (q as f64).ln().max(1.0) + fresnel.err;
    Ok(FastBlockResult { main, tail, edge, err_model })
}

/// First-order boundary term of the class-lattice resonance expansion at
/// the cutoff T:
///
///   e^{2 pi i h T^2} T^{-s} * (1/2 pi i) * sum_b e^{2 pi i p b^2/q} S(theta_b, z),
///
/// with theta_b = {(b - T)/q}, z = 2 h T q, and (Lipschitz summation)
///
///   S(theta, z) = sum_{m != 0} e^{2 pi i m theta}/(z - m)
///               = 2 pi i e^{2 pi i z theta}/(e^{2 pi i z} - 1) - 1/z,
///
/// which degenerates to pi cot(pi z) - 1/z at theta = 0 (the Fourier
/// midpoint convention; the half-weight lattice-edge terms are carried
/// separately).
fn lattice_boundary(s: f64, t: u64, p: i64, q: u64, h: Dd) -> Complex64 {
    let z = h.mul_f64(2.0 * t as f64 * q as f64).to_f64();
    let pm = p.rem_euclid(q as i64) as u64;
    let w = 2.0 * PI * z;
    // g(w) = (e^{iw} - 1)/(iw), stable for small w
    let g = if w.abs() < 1e-150 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(-2.0 * (0.5 * w).sin().powi(2), w.sin()) / Complex64::new(0.0, w)
    };
    let qf = q as f64;
    let mut acc = Z;
    for b in 0..q {
        let res = ((b as u128 * b as u128 % q as u128) * pm as u128 % q as u128) as u64;
        let chi = unit_phase(Dd::from_u64(res) / Dd::from_u64(q));
        let theta = ((b as i128 - (t % q) as i128).rem_euclid(q as i128)) as f64 / qf;
        let s_val = if w.abs() < 1e-8 {
            // limit forms
            if theta == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, TAU * (theta - 0.5))
            }
        } else if theta == 0.0 {
            Complex64::new(PI / (PI * z).tan() - 1.0 / z, 0.0)
        } else {
            // (1/z) * (e^{i w theta}/g - 1)
            let num = Complex64::new(0.0, w * theta).exp();
            (num / g - Complex64::new(1.0, 0.0)) / z
        };
        acc += chi * s_val;
    }
    let amp = unit_phase(h * Dd::from_u128(t as u128 * t as u128)) * (t as f64).powf(-s);
    amp * (acc / Complex64::new(0.0, TAU))
}

fn big_g_cached(theta: &Arc<GaussTheta>, s: f64, n: f64, q: u64, h: Dd) -> Complex64 {
    let count = big_g_terms(n, q, h);
    if count == 0 {
        Z
    } else {
        big_g_with(theta, s, count, q, h)
    }
}

/// Accelerated short increment
///
///   F_{s,N}(p/q + 2h) - F_{s,N}(p/q + h)
///     = (theta_0/sqrt(q)) int_0^N (e^{4 pi i h t^2} - e^{2 pi i h t^2}) t^{-s} dt
///       + G_{s,N}(2h) - G_{s,N}(h) + O((qh)^{s-1/2}),
///
/// valid in the regime h > 0, q^2 h small.
pub fn fast_diff(
    s: f64,
    n: f64,
    p: i64,
    q: u64,
    h: Dd,
    calib: &Calibration,
) -> Result<ComplexValue> {
    if !(h > Dd::ZERO) {
        return Err(Error::RegimeRefused("difference formula needs h > 0".into()));
    }
    let hf = h.to_f64();
    let q2h = (q as f64) * (q as f64) * hf;
    if q2h > calib.diff_regime_max {
        return Err(Error::RegimeRefused(format!(
            "difference formula needs q^2 h <= {} (got {q2h:e})",
            calib.diff_regime_max
        )));
    }
    let theta = theta_cached(p, q)?;
    let main = f_main(s, n, 0.0, hf)?;
    let g2 = big_g_cached(&theta, s, n, q, h.mul_f64(2.0));
    let g1 = big_g_cached(&theta, s, n, q, h);
    let value = theta.theta0() / (q as f64).sqrt() * main.value + g2 - g1;
    let err = calib.diff_kappa * (q as f64 * hf).powf(s - 0.5) + main.err;
    Ok(ComplexValue { value, err })
}

/// f_{s,N}(h; delta) = int_0^N (e^{2 pi i t^2 (delta + 2h)} - e^{2 pi i t^2 (delta + h)}) t^{-s} dt.
///
/// The lower limit is improper; a Taylor expansion of the *difference* of
/// the two phase factors handles [0, eps], so the split is valid through
/// s = 1 where the separate integrals diverge.
pub fn f_main(s: f64, n: f64, delta: f64, h: f64) -> Result<ComplexValue> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::UnsupportedExponent { s });
    }
    if h == 0.0 {
        return Ok(ComplexValue { value: Z, err: 0.0 });
    }
    let w1 = delta + 2.0 * h;
    let w2 = delta + h;
    let wmax = w1.abs().max(w2.abs()).max(1e-300);
    let eps = (0.05 / wmax.sqrt()).min(0.1).min(n);

    // [0, eps]: sum_{k>=1} ((2 pi i w1)^k - (2 pi i w2)^k)/k! * eps^{2k+1-s}/(2k+1-s)
    let mut head = Z;
    let mut p1 = Complex64::new(1.0, 0.0);
    let mut p2 = Complex64::new(1.0, 0.0);
    let c1 = Complex64::new(0.0, TAU * w1);
    let c2 = Complex64::new(0.0, TAU * w2);
    let mut factorial = 1.0f64;
    let mut eps_pow = eps.powf(1.0 - s) * eps * eps;
    for k in 1..=14u32 {
        p1 *= c1;
        p2 *= c2;
        factorial *= k as f64;
        let term = (p1 - p2) * (eps_pow / (factorial * (2.0 * k as f64 + 1.0 - s)));
        head += term;
        if term.norm() < 1e-17 {
            break;
        }
        eps_pow *= eps * eps;
    }

    let mut value = head;
    let mut err = head.norm() * 1e-14 + 1e-16;
    if n > eps {
        let i1 = oscillatory_integral(&OscIntegralSpec {
            s,
            h: Dd::from_f64(w1),
            a: eps,
            b: n,
            method: OscMethod::Auto,
        })?;
        let i2 = oscillatory_integral(&OscIntegralSpec {
            s,
            h: Dd::from_f64(w2),
            a: eps,
            b: n,
            method: OscMethod::Auto,
        })?;
        value += i1.value - i2.value;
        err += i1.err + i2.err;
    }
    Ok(ComplexValue { value, err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Calibration;
    use crate::series::{dyadic_block_decomp, partial_sum_decomp};

    fn cv(spec: OscIntegralSpec) -> ComplexValue {
        oscillatory_integral(&spec).unwrap()
    }

    #[test]
    fn zero_frequency_closed_forms() {
        let v = cv(OscIntegralSpec {
            s: 1.0,
            h: Dd::ZERO,
            a: 1.0,
            b: 2.0,
            method: OscMethod::Auto,
        });
        assert!((v.value.re - std::f64::consts::LN_2).abs() < 1e-14);
        assert!(v.value.im.abs() < 1e-14);

        let v = cv(OscIntegralSpec {
            s: 0.6,
            h: Dd::ZERO,
            a: 2.0,
            b: 5.0,
            method: OscMethod::Auto,
        });
        let expect = (5f64.powf(0.4) - 2f64.powf(0.4)) / 0.4;
        assert!((v.value.re - expect).abs() < 1e-13);
    }

    #[test]
    fn cross_method_agreement_marginal_regime() {
        // moderate oscillation: both methods applicable
        let base = OscIntegralSpec {
            s: 0.75,
            h: Dd::from_f64(1e-6),
            a: 1024.0,
            b: 2048.0,
            method: OscMethod::PanelQuadrature,
        };
        let p = cv(base);
        let i = cv(OscIntegralSpec { method: OscMethod::IbpAsymptotic, ..base });
        let rel = (p.value - i.value).norm() / p.value.norm();
        assert!(rel < 1e-10, "rel = {rel:e}");
    }

    #[test]
    fn cross_method_agreement_far_regime() {
        let base = OscIntegralSpec {
            s: 0.75,
            h: Dd::from_f64(1e-3),
            a: 1024.0,
            b: 2048.0,
            method: OscMethod::PanelQuadrature,
        };
        let p = cv(base);
        let i = cv(OscIntegralSpec { method: OscMethod::IbpAsymptotic, ..base });
        let rel = (p.value - i.value).norm() / p.value.norm();
        assert!(rel < 1e-9, "rel = {rel:e}");
        // and Auto agrees with panels
        let a = cv(OscIntegralSpec { method: OscMethod::Auto, ..base });
        let rel = (p.value - a.value).norm() / p.value.norm();
        assert!(rel < 1e-9, "auto rel = {rel:e}");
    }

    #[test]
    fn rejects_stationary_endpoint() {
        let r = oscillatory_integral(&OscIntegralSpec {
            s: 0.75,
            h: Dd::from_f64(1.0),
            a: 0.0,
            b: 1.0,
            method: OscMethod::Auto,
        });
        assert!(r.is_err());
    }

    #[test]
    fn conjugation_for_negative_frequency() {
        let pos = cv(OscIntegralSpec {
            s: 0.8,
            h: Dd::from_f64(0.01),
            a: 1.0,
            b: 40.0,
            method: OscMethod::Auto,
        });
        let neg = cv(OscIntegralSpec {
            s: 0.8,
            h: Dd::from_f64(-0.01),
            a: 1.0,
            b: 40.0,
            method: OscMethod::Auto,
        });
        assert!((pos.value.conj() - neg.value).norm() < 1e-12);
    }

    #[test]
    fn w_hat_symmetry_under_conjugation() {
        for (r, xi) in [(3.0, 1.7), (10.0, -4.0), (0.5, 0.0)] {
            let a = w_hat(-r, xi, Window::Eta).unwrap().value;
            let b = w_hat(r, -xi, Window::Eta).unwrap().value.conj();
            assert!((a - b).norm() < 1e-12, "R = {r}, xi = {xi}");
        }
    }

    #[test]
    fn w_hat_at_origin_is_the_window_mass() {
        let v = w_hat(0.0, 0.0, Window::Eta).unwrap().value;
        // plain composite quadrature as the reference
        let mut direct = 0.0;
        let panels = 240;
        for k in 0..panels {
            let a = 0.5 + 1.5 * k as f64 / panels as f64;
            let b = 0.5 + 1.5 * (k + 1) as f64 / panels as f64;
            direct += crate::quad::integrate(|t| Window::Eta.eval_f64(t), a, b, 15);
        }
        assert!((v.re - direct).abs() < 1e-11, "{} vs {direct}", v.re);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn w_hat_rejects_sharp_indicator() {
        assert!(w_hat(1.0, 0.0, Window::Indicator12).is_err());
    }

    #[test]
    fn stationary_phase_matches_at_large_r() {
        // xi = 3R puts the stationary point at t = 3/2, well inside the bump
        for r in [256.0, 1024.0] {
            let xi = 3.0 * r;
            let exact = w_hat(r, xi, Window::Eta).unwrap().value;
            let approx = g_stationary(r, xi, Window::Eta);
            let dev = (exact - approx).norm();
            assert!(dev < 20.0 * r.powf(-1.5), "R = {r}: dev = {dev:e}");
            assert!(dev < 0.05 * approx.norm(), "R = {r}: dev = {dev:e}");
        }
    }

    #[test]
    fn g_stationary_support_and_modulus() {
        // outside the window support
        assert_eq!(g_stationary(8.0, 80.0, Window::Eta), Z);
        // |g| = psi(xi/2R)/sqrt(2R)
        let g = g_stationary(8.0, 20.0, Window::Eta);
        let expect = Window::Eta.eval_f64(20.0 / 16.0) / 4.0;
        assert!((g.norm() - expect).abs() < 1e-13);
        // integer R, xi = 2R: phase e^{-2 pi i R} = 1
        let g = g_stationary(64.0, 128.0, Window::Eta);
        let expect = Complex64::from_polar(Window::Eta.eval_f64(1.0) / (128f64).sqrt(), FRAC_PI_4);
        assert!((g - expect).norm() < 1e-12);
    }

    #[test]
    fn gauss_tail_is_empty_below_one_term() {
        let h = Dd::from_f64(1e-9);
        assert_eq!(big_g_terms(1000.0, 3, h), 0);
        assert_eq!(big_g(0.75, 1000.0, 1, 3, h).unwrap(), Z);
        // term count formula
        let h = Dd::from_f64(1e-3);
        assert_eq!(big_g_terms(4096.0, 3, h), (2.0f64 * 4096.0 * 1e-3 * 3.0).floor() as u64);
    }

    #[test]
    fn gauss_tail_triangle_bound() {
        let h = Dd::from_f64(2e-3);
        let (s, n, q) = (0.75, 8192.0, 5u64);
        let g = big_g(s, n, 2, q, h).unwrap();
        let count = big_g_terms(n, q, h);
        let mut bound = 0.0;
        for m in 1..=count {
            bound += (m as f64).powf(-s);
        }
        bound *= 2f64.sqrt() * (2.0 * h.to_f64() * q as f64).powf(s - 0.5);
        assert!(g.norm() <= bound * (1.0 + 1e-9), "{} vs {}", g.norm(), bound);
        assert!(g.norm() > 0.0);
    }

    #[test]
    fn fast_block_matches_direct_summation_empty_tail() {
        let calib = Calibration::default();
        // integer point perturbed by a tiny offset: theta_0 = 1, q = 1
        let h = Dd::from_f64(1e-9);
        let d = PointDecomposition::new_raw(0, 1, h);
        let (s, n) = (0.75, 1u64 << 12);
        let fast = fast_block(s, n, 0, 1, h, &calib).unwrap();
        let direct = dyadic_block_decomp(s, n, &d);
        let dev = (fast.value() - direct.value).norm();
        assert!(dev <= fast.err_model, "dev = {dev:e}, model = {:e}", fast.err_model);
        assert!(dev < 2e-3, "dev = {dev:e}");
        assert_eq!(fast.tail, Z);
    }

    #[test]
    fn fast_block_matches_direct_summation_with_rational_base() {
        let calib = Calibration::default();
        let h = Dd::from_f64(1e-8);
        let d = PointDecomposition::new_raw(2, 5, h);
        let (s, n) = (0.75, 1u64 << 12);
        let fast = fast_block(s, n, 2, 5, h, &calib).unwrap();
        let direct = dyadic_block_decomp(s, n, &d);
        let dev = (fast.value() - direct.value).norm();
        let model = calib.err_kappa * (n as f64).powf(-0.25) * 5f64.ln();
        assert!(dev <= model, "dev = {dev:e}, model = {model:e}");
    }

    #[test]
    fn fast_block_matches_direct_with_nonempty_tail() {
        // large enough offset that the Gauss tail carries real weight: this
        // pins the phase convention m^2/(2 q^2 h) of the tail terms
        let calib = Calibration::default();
        let h = Dd::from_f64(1e-3);
        let d = PointDecomposition::new_raw(1, 3, h);
        let (s, n) = (0.75, 1u64 << 12);
        let fast = fast_block(s, n, 1, 3, h, &calib).unwrap();
        assert!(fast.tail.norm() > 1e-3, "tail should be nonempty");
        let direct = dyadic_block_decomp(s, n, &d);
        let dev = (fast.value() - direct.value).norm();
        assert!(dev < 0.05, "dev = {dev:e}");
        assert!(dev <= fast.err_model, "dev = {dev:e} vs model {:e}", fast.err_model);
    }

    #[test]
    fn fast_block_negative_offset_reflection() {
        let calib = Calibration::default();
        let h = Dd::from_f64(-1e-8);
        let (s, n) = (0.8, 1u64 << 11);
        let fast = fast_block(s, n, 1, 3, h, &calib).unwrap();
        let d = PointDecomposition::new_raw(1, 3, h);
        let direct = dyadic_block_decomp(s, n, &d);
        let dev = (fast.value() - direct.value).norm();
        assert!(dev <= fast.err_model, "dev = {dev:e}");
    }

    #[test]
    fn fast_block_rejects_out_of_regime() {
        let calib = Calibration::default();
        // 4N < q
        assert!(fast_block(0.75, 2, 1, 13, Dd::from_f64(1e-9), &calib).is_err());
        // |h| > 1/q
        assert!(fast_block(0.75, 1024, 1, 8, Dd::from_f64(0.5), &calib).is_err());
    }

    #[test]
    fn fast_diff_matches_direct_difference() {
        let calib = Calibration::default();
        let (s, q, p) = (0.8, 3u64, 1i64);
        let h = Dd::from_f64(1e-7);
        let n = 1u64 << 14;
        let fast = fast_diff(s, n as f64, p, q, h, &calib).unwrap();
        let d2 = PointDecomposition::new_raw(p, q, h.mul_f64(2.0));
        let d1 = PointDecomposition::new_raw(p, q, h);
        let direct = partial_sum_decomp(s, n, &d2).value - partial_sum_decomp(s, n, &d1).value;
        let dev = (fast.value - direct).norm();
        let model = calib.diff_kappa * (3e-7f64).powf(0.3);
        assert!(dev <= model, "dev = {dev:e}, model = {model:e}");
    }

    #[test]
    fn fast_diff_vanishes_with_h() {
        let calib = Calibration::default();
        let v = fast_diff(0.75, 4096.0, 1, 3, Dd::from_f64(1e-15), &calib).unwrap();
        assert!(v.value.norm() < 1e-4, "norm = {:e}", v.value.norm());
    }

    #[test]
    fn fast_diff_refuses_large_q2h() {
        let calib = Calibration::default();
        assert!(fast_diff(0.75, 4096.0, 1, 100, Dd::from_f64(1e-3), &calib).is_err());
    }

    #[test]
    fn f_main_zero_offset() {
        let v = f_main(0.75, 1024.0, 0.3, 0.0).unwrap();
        assert_eq!(v.value, Z);
    }

    #[test]
    fn f_main_scale_invariance_at_zero_delta() {
        // f(s, N, 0, h) = h^{(s-1)/2} Phi(N sqrt(h)); once N sqrt(h) is
        // large the profile saturates, so f(4h)/f(h) -> 4^{(s-1)/2}
        let s = 0.75;
        let h: f64 = 1e-6;
        let n = 400.0 / h.sqrt();
        let f1 = f_main(s, n, 0.0, h).unwrap().value;
        let f4 = f_main(s, n, 0.0, 4.0 * h).unwrap().value;
        let ratio = f4.norm() / f1.norm();
        let expect = 4f64.powf((s - 1.0) / 2.0);
        assert!((ratio - expect).abs() < 0.02 * expect, "ratio = {ratio}, expect = {expect}");
    }

    #[test]
    fn fast_diff_main_term_is_f_main() {
        // structural identity: the integral part of the difference formula
        // equals f_main(s, N, 0, h) scaled by theta_0/sqrt(q)
        let calib = Calibration::default();
        let (s, n, q, p) = (0.75, 2048.0, 3u64, 1i64);
        let h = Dd::from_f64(1e-9); // empty Gauss tails
        let fast = fast_diff(s, n, p, q, h, &calib).unwrap();
        let theta = theta_cached(p, q).unwrap();
        let main = theta.theta0() / (q as f64).sqrt() * f_main(s, n, 0.0, h.to_f64()).unwrap().value;
        assert!((fast.value - main).norm() < 1e-14);
    }
}
