//! Local L2 means and the pointwise regularity exponent.
//!
//! The annulus mean at scale H is the L2 norm against the probability
//! measure on C(H) = [-2H,-H] u [H,2H],
//!
//!     ||f(x+.) - c||_{L2} = ( (1/2H) int_{C(H)} |f(x+h) - c|^2 dh )^{1/2},
//!
//! and the pointwise exponent is the power-law order of that mean in H.
//! Two measurement routes are provided: the centered route (subtract the
//! converged limit value) and the difference route
//!
//!     D(H) = || F_{s,N}(p_j/q_j + 2.) - F_{s,N}(p_j/q_j + .) ||_{L2(C(H))},
//!
//! which needs no center and works at divergent points too. Scales follow
//! the convergents of the point: H_j = |h_j| / K.

use crate::asymptotics::fast_diff;
use crate::config::Calibration;
use crate::diophantine::{
    approx_rate_odd, classify_convergence, convergents, Convergent, ParityClass, RealPoint,
    VerdictTag,
};
use crate::error::{Error, Result};
use crate::fit::{log_log_fit, LineFit};
use crate::quad::gauss_legendre;
use crate::scalar::Dd;
use crate::series::{ladder_target, limit_value_capped, FsEvaluator};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::Serialize;

/// Power-law fit of log(mean) against log(H).
pub type ScalingFit = LineFit<f64>;

/// One measured scale.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScaleSample {
    /// Convergent index the scale came from.
    pub j: usize,
    pub h_scale: f64,
    pub mean: f64,
    pub n_quad: usize,
    /// Truncation order N used by the evaluator.
    pub n_used: f64,
    /// Certified tail (or formula-error) estimate at that N.
    pub tail_est: f64,
    pub audit_pass: bool,
}

/// (scale, mean) profile around one point.
#[derive(Clone, Debug, Serialize)]
pub struct AnnulusProfile {
    pub point: String,
    pub s: f64,
    pub center_re: f64,
    pub center_im: f64,
    pub center_err: f64,
    pub samples: Vec<ScaleSample>,
    pub plan: ScalePlan,
}

/// Measurement plan.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalePlan {
    pub j_min: usize,
    pub j_max: usize,
    /// K in H_j = |h_j| / K.
    pub k_scale: f64,
    /// Quadrature nodes per annulus half (doubled until stable).
    pub quad_nodes: usize,
    pub max_nodes: usize,
    /// Ladder cap for the evaluator.
    pub n_cap: u64,
    /// Saturation constant for the difference route: N = sat / sqrt(H).
    pub saturation: f64,
}

impl Default for ScalePlan {
    fn default() -> Self {
        ScalePlan {
            j_min: 4,
            j_max: 10,
            k_scale: 8.0,
            quad_nodes: 64,
            max_nodes: 256,
            n_cap: 1 << 28,
            saturation: 8.0,
        }
    }
}

/// Exponent measurement report.
#[derive(Clone, Debug, Serialize)]
pub struct AlphaReport {
    pub predicted: f64,
    pub r_odd: f64,
    pub measured: Option<ScalingFit>,
    pub profile: AnnulusProfile,
}

/// RMS of |f(x+h) - center| over the annulus C(H) against its probability
/// measure, by n-node Gauss-Legendre per half.
pub fn annulus_mean(
    f: &mut dyn FnMut(f64) -> Result<Complex64>,
    h_scale: f64,
    center: Complex64,
    n: usize,
) -> Result<f64> {
    if !(h_scale > 0.0) {
        return Err(Error::InvalidParameter("annulus mean needs H > 0".into()));
    }
    if n < 8 {
        return Err(Error::InvalidParameter("annulus mean needs n >= 8 nodes".into()));
    }
    let (xs, ws) = gauss_legendre::<f64>(n);
    let mut acc = 0.0f64;
    for (half_lo, half_hi) in [(-2.0 * h_scale, -h_scale), (h_scale, 2.0 * h_scale)] {
        let mid = 0.5 * (half_lo + half_hi);
        let half = 0.5 * (half_hi - half_lo);
        for (x, w) in xs.iter().zip(ws.iter()) {
            let h = mid + half * x;
            let v = f(h)? - center;
            acc += w * half * v.norm_sqr();
        }
    }
    Ok((acc / (2.0 * h_scale)).max(0.0).sqrt())
}

/// RMS over the ball normalized by 1/H: ((1/H) int_{-H}^{H} |f - c|^2)^{1/2}.
pub fn ball_mean(
    f: &mut dyn FnMut(f64) -> Result<Complex64>,
    h_scale: f64,
    center: Complex64,
    n: usize,
) -> Result<f64> {
    if !(h_scale > 0.0) {
        return Err(Error::InvalidParameter("ball mean needs H > 0".into()));
    }
    if n < 8 {
        return Err(Error::InvalidParameter("ball mean needs n >= 8 nodes".into()));
    }
    let (xs, ws) = gauss_legendre::<f64>(n);
    let mut acc = 0.0f64;
    for (half_lo, half_hi) in [(-h_scale, 0.0), (0.0, h_scale)] {
        let mid = 0.5 * (half_lo + half_hi);
        let half = 0.5 * (half_hi - half_lo);
        for (x, w) in xs.iter().zip(ws.iter()) {
            let h = mid + half * x;
            let v = f(h)? - center;
            acc += w * half * v.norm_sqr();
        }
    }
    Ok((acc / h_scale).max(0.0).sqrt())
}

/// The ball mean rebuilt from its dyadic annuli:
/// ball^2 = sum_{k>=1} 2^{1-k} annulus(H/2^k)^2, truncated at `depth`.
pub fn ball_from_annuli(
    f: &mut dyn FnMut(f64) -> Result<Complex64>,
    h_scale: f64,
    center: Complex64,
    n: usize,
    depth: usize,
) -> Result<f64> {
    let mut acc = 0.0f64;
    for k in 1..=depth {
        let hk = h_scale / 2f64.powi(k as i32);
        let a = annulus_mean(f, hk, center, n)?;
        acc += 2f64.powi(1 - k as i32) * a * a;
    }
    Ok(acc.sqrt())
}

/// Least-squares slope of log(mean) against log(H) over the audit-passing
/// samples of a profile.
pub fn exponent_fit(profile: &AnnulusProfile) -> Result<ScalingFit> {
    let mut hs = Vec::new();
    let mut ms = Vec::new();
    for s in &profile.samples {
        if s.audit_pass && s.mean > 0.0 {
            hs.push(s.h_scale);
            ms.push(s.mean);
        }
    }
    log_log_fit(&hs, &ms)
}

fn check_exponent(s: f64) -> Result<()> {
    if !(s > 0.5 && s <= 1.0) {
        return Err(Error::UnsupportedExponent { s });
    }
    Ok(())
}

/// Predicted pointwise exponent (s - 1 + 1/r_odd)/2.
pub fn predict_alpha(s: f64, r_odd: f64) -> f64 {
    (s - 1.0 + 1.0 / r_odd) / 2.0
}

/// Annulus mean with node doubling until the value moves by < 0.1%.
fn stable_annulus_mean(
    f: &mut dyn FnMut(f64) -> Result<Complex64>,
    h_scale: f64,
    center: Complex64,
    plan: &ScalePlan,
) -> Result<(f64, usize)> {
    let mut n = plan.quad_nodes.max(8);
    let mut prev = annulus_mean(f, h_scale, center, n)?;
    while n < plan.max_nodes {
        let next_n = (n * 2).min(plan.max_nodes);
        let next = annulus_mean(f, h_scale, center, next_n)?;
        let moved = (next - prev).abs() / prev.abs().max(1e-300);
        n = next_n;
        prev = next;
        if moved < 1e-3 {
            break;
        }
    }
    Ok((prev, n))
}

/// Centered exponent measurement at a convergent point: annulus means of
/// F(x + .) - F_s(x) at scales H_j = |h_j|/K, with per-scale truncation
/// chosen so the certified tail stays under a tenth of the measured mean.
pub fn estimate_alpha(x: &RealPoint, s: f64, plan: &ScalePlan) -> Result<AlphaReport> {
    estimate_alpha_with(x, s, plan, &Calibration::default())
}

pub fn estimate_alpha_with(
    x: &RealPoint,
    s: f64,
    plan: &ScalePlan,
    calib: &Calibration,
) -> Result<AlphaReport> {
    check_exponent(s)?;
    let verdict = classify_convergence(x, s)?;
    if verdict.tag != VerdictTag::Converges {
        return Err(Error::Divergent { verdict: verdict.tag.to_string() });
    }
    let rate = approx_rate_odd(x, 24)?;
    let predicted = predict_alpha(s, rate.value);

    let ev = FsEvaluator::new(s, x, plan.j_max + 50, *calib);
    if ev.convs.len() <= plan.j_max {
        return Err(Error::InsufficientData(format!(
            "point has only {} convergents, need {}",
            ev.convs.len(),
            plan.j_max + 1
        )));
    }

    // center: converged value, tolerance well under the smallest expected mean
    let h_min = ev.convs[plan.j_max].ln_abs_h.exp() / plan.k_scale;
    let mean_floor = h_min.powf(predicted.max(0.02));
    let center_tol = (0.05 * mean_floor).max(1e-9);
    let center = limit_value_capped(s, x, center_tol, plan.n_cap, false)?;

    let mut samples = Vec::new();
    for j in plan.j_min..=plan.j_max {
        let c = ev.convs[j].clone();
        let h_scale = c.ln_abs_h.exp() / plan.k_scale;
        if !(h_scale > 1e-200) {
            continue;
        }
        let q = match c.q.to_u64() {
            Some(q) if q <= (1 << 40) => q,
            _ => continue,
        };
        let rough_mean = h_scale.powf(predicted.max(0.02));
        // The truncation N always sits past the saturation scale 1/sqrt(H),
        // so every discarded dyadic block is phase-decorrelated from the
        // measured differences across the annulus; the discarded tail then
        // enters the RMS mean in quadrature and shifts it by at most
        // est^2 / (2 mean). The audit certifies that shift against the
        // configured fraction of the mean, i.e. est <= sqrt(2 f) * mean.
        let gate = (2.0 * calib.tail_audit_fraction).sqrt();

        // prefix so the ladder's own (prefix-reducible) formula error is
        // well under the certified level; the order term applies to every
        // later block regardless and is excluded here
        let mut prefix = q.next_power_of_two().max(1 << 10);
        while calib.audit_kappa_plain * (q as f64).sqrt() * (prefix as f64).powf(-s)
            > 0.5 * calib.tail_audit_fraction * rough_mean
            && prefix < (1 << 22)
        {
            prefix *= 2;
        }

        // advance N on the (cheap) audit against the expected mean first,
        // then measure; re-escalate only if the measured mean comes in low
        let sat = (plan.saturation / h_scale.sqrt()) as u64;
        let mut n = ladder_target(prefix, prefix.max(4 * q).max(sat));
        while ev.tail_estimate(n as f64) > gate * rough_mean && 2 * n <= plan.n_cap {
            n *= 2;
        }
        let (mean, n_quad, tail) = loop {
            let tail = ev.tail_estimate(n as f64);
            let mut f = |h: f64| -> Result<Complex64> {
                let offset = c.h + Dd::from_f64(h);
                Ok(ev.eval_at_base(c.j, offset, n, prefix)?.value)
            };
            let (m, nq) = stable_annulus_mean(&mut f, h_scale, center.value, plan)?;
            if tail <= gate * m || 2 * n > plan.n_cap {
                break (m, nq, tail);
            }
            n *= 2;
        };
        let audit_pass = tail <= gate * mean;
        samples.push(ScaleSample {
            j,
            h_scale,
            mean,
            n_quad,
            n_used: n as f64,
            tail_est: tail,
            audit_pass,
        });
    }

    let profile = AnnulusProfile {
        point: x.to_string(),
        s,
        center_re: center.value.re,
        center_im: center.value.im,
        center_err: center.err,
        samples,
        plan: *plan,
    };
    let measured = exponent_fit(&profile).ok();
    Ok(AlphaReport { predicted, r_odd: rate.value, measured, profile })
}

/// Difference-route exponent measurement: D(H_j) at the convergents of x
/// with surviving parity. Works at divergent points; no center needed.
pub fn measure_alpha_diff(x: &RealPoint, s: f64, plan: &ScalePlan) -> Result<AlphaReport> {
    measure_alpha_diff_with(x, s, plan, &Calibration::default())
}

pub fn measure_alpha_diff_with(
    x: &RealPoint,
    s: f64,
    plan: &ScalePlan,
    calib: &Calibration,
) -> Result<AlphaReport> {
    check_exponent(s)?;
    let rate = approx_rate_odd(x, 24)?;
    let predicted = predict_alpha(s, rate.value);
    let convs = convergents(x, plan.j_max.saturating_add(2));

    let mut samples = Vec::new();
    for c in convs.iter() {
        if c.j < plan.j_min.max(1) || c.j > plan.j_max {
            continue;
        }
        if c.parity == ParityClass::TwoOdd || c.h.is_zero() {
            continue;
        }
        if c.ln_abs_h < -140.0 * std::f64::consts::LN_2 || c.ln_abs_h > (0.03f64).ln() {
            continue;
        }
        if let Some(sample) = diff_sample(s, c, plan, calib)? {
            samples.push(sample);
        }
    }
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} usable difference scales",
            samples.len()
        )));
    }
    let profile = AnnulusProfile {
        point: x.to_string(),
        s,
        center_re: 0.0,
        center_im: 0.0,
        center_err: 0.0,
        samples,
        plan: *plan,
    };
    let measured = exponent_fit(&profile).ok();
    Ok(AlphaReport { predicted, r_odd: rate.value, measured, profile })
}

/// One difference-route scale: RMS of the increment over the annulus.
fn diff_sample(
    s: f64,
    c: &Convergent,
    plan: &ScalePlan,
    calib: &Calibration,
) -> Result<Option<ScaleSample>> {
    let h_scale = c.ln_abs_h.exp() / plan.k_scale;
    let q = match c.q.to_u64() {
        Some(q) => q,
        None => return Ok(None),
    };
    let p = c.p.mod_floor(&num_bigint::BigInt::from(q)).to_i64().unwrap_or(0);
    let n_sat = plan.saturation / h_scale.sqrt();
    // regime: q^2 h small at the outer annulus edge
    if (q as f64) * (q as f64) * 2.0 * h_scale > calib.diff_regime_max {
        return Ok(None);
    }
    // theta tables are only affordable up to moderate moduli
    if q > 1_000_000 {
        return Ok(None);
    }

    let mut worst_err = 0.0f64;
    let mut f = |h: f64| -> Result<Complex64> {
        let v = if h > 0.0 {
            fast_diff(s, n_sat, p, q, Dd::from_f64(h), calib)?
        } else {
            let v = fast_diff(s, n_sat, -p, q, Dd::from_f64(-h), calib)?;
            crate::series::ComplexValue { value: v.value.conj(), err: v.err }
        };
        worst_err = worst_err.max(v.err);
        Ok(v.value)
    };
    let zero = Complex64::new(0.0, 0.0);
    let (mean, n_quad) = stable_annulus_mean(&mut f, h_scale, zero, plan)?;
    // distortion gate: the formula error bound must stay well under the
    // measured increment norm (the bound runs ~5-30x above actual error)
    let audit_pass = worst_err <= 0.5 * mean.max(1e-300);
    Ok(Some(ScaleSample {
        j: c.j,
        h_scale,
        mean,
        n_quad,
        n_used: n_sat,
        tail_est: worst_err,
        audit_pass,
    }))
}

/// Spectrum value for one exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SpectrumValue {
    Dim(f64),
    /// No point carries this exponent in the covered range.
    Empty,
}

/// d(alpha) = 4 alpha + 2 - 2s on [0, s/2 - 1/4]; empty elsewhere.
pub fn spectrum_point(s: f64, alpha: f64) -> Result<SpectrumValue> {
    check_exponent(s)?;
    let hi = s / 2.0 - 0.25;
    if alpha < -1e-15 || alpha > hi + 1e-15 {
        return Ok(SpectrumValue::Empty);
    }
    Ok(SpectrumValue::Dim(4.0 * alpha + 2.0 - 2.0 * s))
}

/// Normalized rational-center lower-bound profile: the quantity
/// D(H) * sqrt(q) * H^{(1-s)/2} for x = p/q, which stays above a positive
/// constant as H -> 0 when q != 2*odd.
pub fn rational_center_profile(
    s: f64,
    p: i64,
    q: u64,
    h_scales: &[f64],
    nodes: usize,
    calib: &Calibration,
) -> Result<Vec<(f64, f64)>> {
    check_exponent(s)?;
    let mut out = Vec::with_capacity(h_scales.len());
    for &h_scale in h_scales {
        let n_sat = 8.0 / h_scale.sqrt();
        let mut f = |h: f64| -> Result<Complex64> {
            let v = if h > 0.0 {
                fast_diff(s, n_sat, p, q, Dd::from_f64(h), calib)?
            } else {
                let v = fast_diff(s, n_sat, -p, q, Dd::from_f64(-h), calib)?;
                crate::series::ComplexValue { value: v.value.conj(), err: v.err }
            };
            Ok(v.value)
        };
        let d = annulus_mean(&mut f, h_scale, Complex64::new(0.0, 0.0), nodes)?;
        out.push((h_scale, d * (q as f64).sqrt() * h_scale.powf((1.0 - s) / 2.0)));
    }
    Ok(out)
}
