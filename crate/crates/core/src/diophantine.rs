//! Exact continued-fraction machinery: partial quotients, convergents with
//! extended-precision offsets, approximation rates restricted to the
//! denominator classes where the main Gauss-sum term survives, the series
//!
//!     Sigma_s(x) = sum_{j : q_j != 2*odd} delta_j * sqrt(q_{j+1} / (q_j q_{j+1})^s),
//!
//! the convergence classification it controls, and constructors for points
//! with a prescribed approximation rate.

use crate::bignum::{big_to_dd, ln_add_exp, ln_big};
use crate::error::{Error, Result};
use crate::scalar::Dd;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::fmt;

/// Residue class of a convergent denominator mod 4. `TwoOdd` (q = 2 mod 4)
/// is exactly the class where the normalized Gauss sum theta_0 vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityClass {
    TwoOdd,
    NotTwoOdd,
}

impl ParityClass {
    pub fn of(q: &BigInt) -> ParityClass {
        let m4 = (q & BigInt::from(3u8)).to_u8().unwrap();
        if m4 == 2 {
            ParityClass::TwoOdd
        } else {
            ParityClass::NotTwoOdd
        }
    }
}

/// Deterministic digit-generation rules for synthetic points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GenRule {
    /// Digits a_{j+1} = max(1, ceil(q_j^{rate-2})), with the denominator
    /// steered away from the 2*odd class, so that r_j -> rate along
    /// surviving indices. `seed` perturbs the first digit.
    PrescribedRate { rate: f64, seed: i64 },
}

/// An evaluation point given exactly.
#[derive(Clone, Debug, PartialEq)]
pub enum RealPoint {
    /// p/q in lowest terms, q >= 1.
    Rational { p: BigInt, q: BigInt },
    /// (a + b*sqrt(d))/c with d a positive non-square and c != 0, b > 0
    /// after normalization.
    Quadratic { a: BigInt, b: BigInt, d: u64, c: BigInt },
    /// Finite continued fraction [a0; a1, a2, ...] in canonical form
    /// (a_j >= 1 for j >= 1, final digit >= 2 unless the expansion is a
    /// bare integer).
    ExplicitCf { digits: Vec<BigInt> },
    /// Rule-generated infinite continued fraction.
    GeneratedCf { rule: GenRule },
}

impl RealPoint {
    pub fn rational(p: i64, q: i64) -> Result<RealPoint> {
        Self::rational_big(BigInt::from(p), BigInt::from(q))
    }

    pub fn rational_big(p: BigInt, q: BigInt) -> Result<RealPoint> {
        if q.is_zero() {
            return Err(Error::InvalidParameter("rational with q = 0".into()));
        }
        let (mut p, mut q) = (p, q);
        if q.is_negative() {
            p = -p;
            q = -q;
        }
        let g = p.gcd(&q);
        if !g.is_one() {
            p /= &g;
            q /= &g;
        }
        Ok(RealPoint::Rational { p, q })
    }

    /// (a + b*sqrt(d))/c. A zero surd coefficient is routed to the rational
    /// representation.
    pub fn quadratic(a: i64, b: i64, d: u64, c: i64) -> Result<RealPoint> {
        if c == 0 {
            return Err(Error::InvalidParameter("quadratic with c = 0".into()));
        }
        if b == 0 {
            return Self::rational(a, c);
        }
        let s = (d as f64).sqrt() as u64;
        if d == 0 || s * s == d || (s + 1) * (s + 1) == d {
            return Err(Error::InvalidParameter(format!("d = {d} must be a positive non-square")));
        }
        let (mut a, mut b, mut c) = (BigInt::from(a), BigInt::from(b), BigInt::from(c));
        if b.is_negative() {
            a = -a;
            b = -b;
            c = -c;
        }
        Ok(RealPoint::Quadratic { a, b, d, c })
    }

    pub fn explicit_cf(digits: Vec<i64>) -> Result<RealPoint> {
        let digits: Vec<BigInt> = digits.into_iter().map(BigInt::from).collect();
        Self::explicit_cf_big(digits)
    }

    pub fn explicit_cf_big(digits: Vec<BigInt>) -> Result<RealPoint> {
        if digits.is_empty() {
            return Err(Error::InvalidParameter("empty digit sequence".into()));
        }
        for (j, a) in digits.iter().enumerate().skip(1) {
            if !a.is_positive() {
                return Err(Error::InvalidParameter(format!("digit a_{j} must be >= 1")));
            }
        }
        if digits.len() > 1 && digits.last().unwrap() < &BigInt::from(2u8) {
            return Err(Error::InvalidParameter(
                "canonical form requires the final digit of a terminating expansion to be >= 2"
                    .into(),
            ));
        }
        Ok(RealPoint::ExplicitCf { digits })
    }

    /// Point whose approximation rate along surviving denominator classes
    /// tends to `rate`.
    pub fn with_rate(rate: f64, seed: i64) -> Result<RealPoint> {
        if !(rate >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "rate {rate} < 2: approximation rates below 2 are impossible"
            )));
        }
        Ok(RealPoint::GeneratedCf { rule: GenRule::PrescribedRate { rate, seed } })
    }

    pub fn is_rational_value(&self) -> bool {
        matches!(self, RealPoint::Rational { .. } | RealPoint::ExplicitCf { .. })
    }

    /// Approximate numeric value (diagnostics only).
    pub fn value_dd(&self) -> Dd {
        match self {
            RealPoint::Rational { p, q } => big_to_dd(p) / big_to_dd(q),
            RealPoint::Quadratic { a, b, d, c } => {
                let s = Dd::from_u64(*d).sqrt();
                (big_to_dd(a) + big_to_dd(b) * s) / big_to_dd(c)
            }
            _ => {
                let stream = digit_stream(self, 60);
                backward_eval(&stream.digits, 0, stream.terminated)
            }
        }
    }
}

impl fmt::Display for RealPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealPoint::Rational { p, q } => write!(f, "rat:{p}/{q}"),
            RealPoint::Quadratic { a, b, d, c } => write!(f, "quad:({a}+{b}*sqrt({d}))/{c}"),
            RealPoint::ExplicitCf { digits } => {
                write!(f, "cf:[{}", digits[0])?;
                for (i, a) in digits.iter().enumerate().skip(1) {
                    write!(f, "{}{a}", if i == 1 { ";" } else { "," })?;
                }
                write!(f, "]")
            }
            RealPoint::GeneratedCf { rule: GenRule::PrescribedRate { rate, seed } } => {
                write!(f, "rate:r={rate},seed={seed}")
            }
        }
    }
}

/// One convergent p_j/q_j with the signed offset h_j = x - p_j/q_j.
#[derive(Clone, Debug, Serialize)]
pub struct Convergent {
    pub j: usize,
    #[serde(serialize_with = "ser_big")]
    pub p: BigInt,
    #[serde(serialize_with = "ser_big")]
    pub q: BigInt,
    /// Offset x - p/q in double-double; underflows to zero once
    /// |h| < ~1e-290 (use `ln_abs_h` there). Exactly zero at the final
    /// convergent of a terminating expansion.
    #[serde(serialize_with = "ser_dd")]
    pub h: Dd,
    /// Bound on the absolute error of `h` (0 when exact).
    pub h_err: f64,
    /// ln |h|; -inf when h = 0 exactly. Never underflows.
    pub ln_abs_h: f64,
    /// r_j with |h_j| = q_j^{-r_j}; None when h = 0 or q_j = 1.
    pub r: Option<f64>,
    pub parity: ParityClass,
}

fn ser_big<S: serde::Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_dd<S: serde::Serializer>(v: &Dd, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(v.to_f64())
}

/// Outcome of the convergence classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictTag {
    Converges,
    Diverges,
    Boundary,
}

impl fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictTag::Converges => write!(f, "converges"),
            VerdictTag::Diverges => write!(f, "diverges"),
            VerdictTag::Boundary => write!(f, "boundary"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceVerdict {
    pub tag: VerdictTag,
    /// Partial Sigma_s value when converging/boundary; the largest
    /// non-vanishing criterion term when diverging.
    pub witness: f64,
    /// Rate estimate used (None for rational values).
    pub r_odd: Option<f64>,
}

/// Tail verdict for the partial Sigma_s sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailVerdict {
    Finite,
    Infinite,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaReport {
    pub partial: f64,
    /// (j, term) pairs over surviving indices.
    pub terms: Vec<(usize, f64)>,
    pub verdict: TailVerdict,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateEstimate {
    pub value: f64,
    pub exact: bool,
}

// --- digit streams ------------------------------------------------------

/// Expansion digits plus the exact quadratic-surd state needed to evaluate
/// complete quotients.
struct DigitStream {
    digits: Vec<BigInt>,
    /// true when the expansion terminated (rational value fully expanded)
    terminated: bool,
    /// for quadratic points: (P_k, Q_k) with complete quotient
    /// (P_k + sqrt(D))/Q_k, and D itself
    surd_states: Option<(Vec<(BigInt, BigInt)>, BigInt)>,
}

/// Floor of (P + sqrt(D))/Q for non-square D > 0, exact.
fn surd_floor(p: &BigInt, d: &BigInt, q: &BigInt) -> BigInt {
    let s = d.sqrt(); // floor(sqrt(D)); strict since D is non-square
    if q.is_positive() {
        (p + &s).div_floor(q)
    } else {
        // (P + sqrt(D))/Q = (-P - sqrt(D))/(-Q); -P - sqrt(D) lies in the
        // open interval (-P - s - 1, -P - s)
        (-(p + &s) - BigInt::one()).div_floor(&-q)
    }
}

/// Computational horizon on denominator growth. Digit generation for
/// rule-generated points stops once q crosses this many bits; convergents
/// past the horizon are not produced.
const MAX_Q_BITS: u64 = 600_000;

fn digit_stream(x: &RealPoint, want: usize) -> DigitStream {
    match x {
        RealPoint::Rational { p, q } => {
            let mut digits = Vec::new();
            let (mut num, mut den) = (p.clone(), q.clone());
            while !den.is_zero() && digits.len() <= want {
                let (fl, rem) = num.div_mod_floor(&den);
                digits.push(fl);
                num = den;
                den = rem;
            }
            let terminated = den.is_zero();
            if terminated {
                canonicalize(&mut digits);
            }
            DigitStream { digits, terminated, surd_states: None }
        }
        RealPoint::ExplicitCf { digits } => {
            let take: Vec<BigInt> = digits.iter().take(want.saturating_add(1)).cloned().collect();
            let terminated = digits.len() <= want.saturating_add(1);
            DigitStream { digits: take, terminated, surd_states: None }
        }
        RealPoint::Quadratic { a, b, d, c } => {
            // normalize to (P0 + sqrt(D))/Q0 with Q0 | D - P0^2
            let abs_c = c.abs();
            let p0 = a * &abs_c;
            let q0 = c * &abs_c;
            let big_d = BigInt::from(*d) * b * b * c * c;
            let mut digits = Vec::with_capacity(want + 1);
            let mut states = Vec::with_capacity(want + 2);
            let (mut pk, mut qk) = (p0, q0);
            states.push((pk.clone(), qk.clone()));
            for _ in 0..=want {
                let ak = surd_floor(&pk, &big_d, &qk);
                digits.push(ak.clone());
                let p_next = &ak * &qk - &pk;
                let num = &big_d - &p_next * &p_next;
                let (q_next, rem) = num.div_mod_floor(&qk);
                debug_assert!(rem.is_zero(), "surd recurrence invariant broken");
                pk = p_next;
                qk = q_next;
                states.push((pk.clone(), qk.clone()));
            }
            DigitStream { digits, terminated: false, surd_states: Some((states, big_d)) }
        }
        RealPoint::GeneratedCf { rule: GenRule::PrescribedRate { rate, seed } } => {
            let mut digits = vec![BigInt::zero()];
            let mut q_prev = BigInt::zero(); // q_{-1}
            let mut q_cur = BigInt::one(); // q_0
            for j in 0..want {
                if q_cur.bits() > MAX_Q_BITS {
                    break;
                }
                let mut a = if j == 0 {
                    BigInt::from(1 + seed.rem_euclid(4))
                } else {
                    ceil_pow(&q_cur, rate - 2.0)
                };
                if a < BigInt::one() {
                    a = BigInt::one();
                }
                let mut q_next = &a * &q_cur + &q_prev;
                // steer q_{j+1} out of the 2*odd class; q_cur is odd
                // whenever q_next is even, so one increment always fixes it
                if ParityClass::of(&q_next) == ParityClass::TwoOdd {
                    a += BigInt::one();
                    q_next += &q_cur;
                }
                digits.push(a);
                q_prev = q_cur;
                q_cur = q_next;
            }
            DigitStream { digits, terminated: false, surd_states: None }
        }
    }
}

/// ceil(q^e) for a positive big q and real e >= 0, via the logarithm; the
/// result is deterministic for a given build and accurate to ~1e-13
/// relative, which is all the rate construction needs.
fn ceil_pow(q: &BigInt, e: f64) -> BigInt {
    if e <= 0.0 {
        return BigInt::one();
    }
    let ln_val = e * ln_big(q);
    if ln_val < 63.0 * std::f64::consts::LN_2 {
        return BigInt::from(ln_val.exp().ceil() as u64);
    }
    let exp2 = ln_val / std::f64::consts::LN_2;
    let shift = (exp2.floor() as u64).saturating_sub(52);
    let mant = (ln_val - shift as f64 * std::f64::consts::LN_2).exp();
    BigInt::from_f64(mant.ceil()).unwrap() << shift
}

fn canonicalize(digits: &mut Vec<BigInt>) {
    if digits.len() > 1 && digits.last().unwrap().is_one() {
        let one = digits.pop();
        debug_assert!(one.is_some());
        let last = digits.last_mut().unwrap();
        *last += BigInt::one();
    }
}

// --- public operations --------------------------------------------------

/// Partial quotients a_0..a_J. Terminating expansions return fewer digits.
pub fn cf_digits(x: &RealPoint, j_max: usize) -> Vec<BigInt> {
    digit_stream(x, j_max).digits
}

/// Convergents p_0/q_0 .. p_J/q_J with offsets. Terminating expansions
/// produce their final convergent with h = 0.
pub fn convergents(x: &RealPoint, j_max: usize) -> Vec<Convergent> {
    // extra digits so complete quotients at depth j_max are sharp
    let slack = 90;
    let stream = digit_stream(x, j_max.saturating_add(slack));
    let digits = &stream.digits;
    // non-terminated digit-only streams need one tail digit per convergent
    let n = if stream.terminated || stream.surd_states.is_some() {
        digits.len().min(j_max.saturating_add(1))
    } else {
        digits.len().saturating_sub(1).min(j_max.saturating_add(1))
    };
    let mut out = Vec::with_capacity(n);

    let mut p_prev = BigInt::one(); // p_{-1}
    let mut q_prev = BigInt::zero(); // q_{-1}
    let mut p_cur = digits[0].clone(); // p_0
    let mut q_cur = BigInt::one(); // q_0

    // exact value for rational-type points, as (num, den)
    let exact: Option<(BigInt, BigInt)> = if stream.surd_states.is_none() && stream.terminated {
        let m = digits.len();
        let mut pn = BigInt::one();
        let mut qn = BigInt::zero();
        let mut pc = digits[0].clone();
        let mut qc = BigInt::one();
        for a in digits.iter().take(m).skip(1) {
            let p_next = a * &pc + &pn;
            let q_next = a * &qc + &qn;
            pn = pc;
            qn = qc;
            pc = p_next;
            qc = q_next;
        }
        Some((pc, qc))
    } else {
        None
    };

    for j in 0..n {
        if j > 0 {
            let a = &digits[j];
            let p_next = a * &p_cur + &p_prev;
            let q_next = a * &q_cur + &q_prev;
            p_prev = std::mem::replace(&mut p_cur, p_next);
            q_prev = std::mem::replace(&mut q_cur, q_next);
        }
        let parity = ParityClass::of(&q_cur);

        let (h, h_err, ln_abs_h) = if let Some((num, den)) = &exact {
            // h = num/den - p_j/q_j, exact big-integer arithmetic
            let hn = num * &q_cur - &p_cur * den;
            let hd = den * &q_cur;
            if hn.is_zero() {
                (Dd::ZERO, 0.0, f64::NEG_INFINITY)
            } else {
                let h = big_to_dd(&hn) / big_to_dd(&hd);
                let ln = ln_big(&hn.abs()) - ln_big(&hd);
                (h, h.to_f64().abs() * 1e-30, ln)
            }
        } else {
            // h_j = (-1)^j / (q_j (omega_{j+1} q_j + q_{j-1})) where
            // omega_{j+1} is the complete quotient past index j
            let (omega, ln_omega) = complete_quotient(&stream, j + 1);
            let ln_den = {
                let lq = ln_big(&q_cur);
                let lq_prev =
                    if q_prev.is_zero() { f64::NEG_INFINITY } else { ln_big(&q_prev) };
                lq + ln_add_exp(ln_omega + lq, lq_prev)
            };
            let ln_abs_h = -ln_den;
            let h_mag = if ln_abs_h > -650.0 {
                let den = omega * big_to_dd(&q_cur) + big_to_dd(&q_prev);
                (big_to_dd(&q_cur) * den).recip()
            } else {
                Dd::ZERO
            };
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let h = h_mag.mul_f64(sign);
            (h, h.to_f64().abs() * 1e-28, ln_abs_h)
        };

        let r = if ln_abs_h == f64::NEG_INFINITY || q_cur.is_one() {
            None
        } else {
            Some(-ln_abs_h / ln_big(&q_cur))
        };

        out.push(Convergent {
            j,
            p: p_cur.clone(),
            q: q_cur.clone(),
            h,
            h_err,
            ln_abs_h,
            r,
            parity,
        });
    }
    out
}

/// Complete quotient omega_k = [a_k; a_{k+1}, ...] as (value, ln value).
/// The value saturates to infinity when it exceeds f64 range; the log is
/// always finite.
fn complete_quotient(stream: &DigitStream, k: usize) -> (Dd, f64) {
    if let Some((states, d)) = &stream.surd_states {
        if k < states.len() {
            let (pk, qk) = &states[k];
            let omega = (big_to_dd(pk) + big_to_dd(d).sqrt()) / big_to_dd(qk);
            return (omega, omega.to_f64().ln());
        }
    }
    let omega = backward_eval(&stream.digits, k, stream.terminated);
    let ln = if omega.hi.is_finite() {
        omega.to_f64().ln()
    } else {
        // dominated by the leading digit
        ln_big(&stream.digits[k])
    };
    (omega, ln)
}

/// Evaluate [a_k; a_{k+1}, ..., a_m] backward in double-double. For a
/// non-terminated stream the unseen tail is replaced by a_m + 1/2; the
/// truncation error is below 2^-95 as soon as the tail convergent
/// denominators exceed ~1e45, which the caller's digit slack guarantees
/// for all supported points.
fn backward_eval(digits: &[BigInt], k: usize, exact_tail: bool) -> Dd {
    let mut idx = digits.len();
    if !exact_tail {
        // find truncation depth: tail denominators past 1e45 (grow at
        // least like Fibonacci), or a huge digit
        let mut prod = 1.0f64;
        for (i, a) in digits.iter().enumerate().skip(k) {
            let af = a.to_f64().unwrap_or(f64::INFINITY).max(1.0);
            prod *= af + 0.5;
            if prod > 1e45 {
                idx = i + 1;
                break;
            }
        }
        idx = idx.min(digits.len());
    }
    let fudge = if exact_tail { Dd::ZERO } else { Dd::from_f64(0.5) };
    let mut t = big_to_dd(&digits[idx - 1]) + fudge;
    for a in digits[k..idx - 1].iter().rev() {
        t = big_to_dd(a) + t.recip();
    }
    t
}

/// Rate estimate from already-computed convergents: the running maximum of
/// r_j over the last half of usable (finite-r, surviving-parity) indices,
/// a limsup proxy.
pub fn rate_estimate_from_convergents(convs: &[Convergent]) -> Option<f64> {
    let usable: Vec<f64> = convs
        .iter()
        .filter(|c| c.parity == ParityClass::NotTwoOdd)
        .filter_map(|c| c.r)
        .filter(|r| r.is_finite())
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let start = usable.len() / 2;
    usable[start..].iter().copied().reduce(f64::max)
}

/// Approximation rate along surviving denominator classes, from the first
/// `j_max` convergents. Exact for quadratic points (always 2) and for
/// rule-generated points.
pub fn approx_rate_odd(x: &RealPoint, j_max: usize) -> Result<RateEstimate> {
    match x {
        RealPoint::Rational { .. } => Err(Error::RateUndefinedForRational),
        RealPoint::Quadratic { .. } => Ok(RateEstimate { value: 2.0, exact: true }),
        RealPoint::GeneratedCf { rule: GenRule::PrescribedRate { rate, .. } } => {
            Ok(RateEstimate { value: *rate, exact: true })
        }
        RealPoint::ExplicitCf { .. } => {
            let convs = convergents(x, j_max);
            match rate_estimate_from_convergents(&convs) {
                Some(value) => Ok(RateEstimate { value, exact: false }),
                None => Err(Error::InsufficientData(
                    "too few usable convergents for a rate estimate".into(),
                )),
            }
        }
    }
}

/// Criterion term delta_j * sqrt(q_{j+1}/(q_j q_{j+1})^s) in log space.
fn sigma_term(s: f64, ln_qj: f64, ln_qj1: f64) -> f64 {
    let delta_ln = if s == 1.0 {
        let d = ln_qj1 - ln_qj;
        if d <= 0.0 {
            return 0.0;
        }
        d.ln()
    } else {
        0.0
    };
    let ln_term = delta_ln + 0.5 * ((1.0 - s) * ln_qj1 - s * ln_qj);
    ln_term.exp()
}

fn check_exponent(s: f64) -> Result<()> {
    if !(s > 0.5 && s <= 1.0) {
        return Err(Error::UnsupportedExponent { s });
    }
    Ok(())
}

/// Partial sum of Sigma_s over j = 1..=J plus a tail verdict.
pub fn sigma_s(x: &RealPoint, s: f64, j_max: usize) -> Result<SigmaReport> {
    check_exponent(s)?;
    if j_max < 2 {
        return Err(Error::InvalidParameter("sigma_s needs J >= 2".into()));
    }
    let convs = convergents(x, j_max + 1);
    let mut partial = 0.0f64;
    let mut terms = Vec::new();
    for w in convs.windows(2) {
        let (c, c1) = (&w[0], &w[1]);
        if c.j == 0 || c.parity == ParityClass::TwoOdd {
            continue;
        }
        let t = sigma_term(s, ln_big(&c.q), ln_big(&c1.q)).min(1e100);
        partial += t;
        terms.push((c.j, t));
    }

    let verdict = match x {
        RealPoint::Quadratic { .. } => TailVerdict::Finite,
        RealPoint::Rational { .. } => TailVerdict::Finite,
        RealPoint::GeneratedCf { rule: GenRule::PrescribedRate { rate, .. } } => {
            if s == 1.0 || *rate < (1.0 / (1.0 - s)) * (1.0 - 1e-9) {
                TailVerdict::Finite
            } else {
                TailVerdict::Infinite
            }
        }
        RealPoint::ExplicitCf { .. } => tail_heuristic(&terms),
    };
    Ok(SigmaReport { partial, terms, verdict })
}

fn tail_heuristic(terms: &[(usize, f64)]) -> TailVerdict {
    if terms.len() < 4 {
        return TailVerdict::Unknown;
    }
    let vals: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let tail = &vals[vals.len() - 4..];
    let decaying = tail.windows(2).all(|w| w[1] <= 0.9 * w[0]);
    if decaying {
        return TailVerdict::Finite;
    }
    let max = vals.iter().cloned().fold(0.0, f64::max);
    let last = *vals.last().unwrap();
    if last > 1e-3 && last >= 0.3 * max {
        return TailVerdict::Infinite;
    }
    TailVerdict::Unknown
}

/// Knobs for the convergence classification.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClassifyConfig {
    /// Probing depth in convergents.
    pub j_probe: usize,
    /// A term of the divergence criterion counts as non-vanishing above
    /// this threshold.
    pub divergence_threshold: f64,
    /// Number of non-vanishing terms required to declare divergence.
    pub divergence_count: usize,
    /// Relative width of the boundary zone around r = 1/(1-s).
    pub boundary_rel_tol: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            j_probe: 24,
            divergence_threshold: 1e-3,
            divergence_count: 3,
            boundary_rel_tol: 1e-6,
        }
    }
}

pub fn classify_convergence(x: &RealPoint, s: f64) -> Result<ConvergenceVerdict> {
    classify_convergence_with(x, s, &ClassifyConfig::default())
}

pub fn classify_convergence_with(
    x: &RealPoint,
    s: f64,
    cfg: &ClassifyConfig,
) -> Result<ConvergenceVerdict> {
    check_exponent(s)?;

    if x.is_rational_value() {
        // grouping the series by residue class mod q kills the main term
        // exactly when q = 2 mod 4 (theta_0 = 0) and only then
        let convs = convergents(x, 100_000);
        let last = convs.last().expect("terminating expansion has a final convergent");
        debug_assert!(last.h.is_zero());
        let tag = if ParityClass::of(&last.q) == ParityClass::TwoOdd {
            VerdictTag::Converges
        } else {
            VerdictTag::Diverges
        };
        return Ok(ConvergenceVerdict { tag, witness: 1.0, r_odd: None });
    }

    let sigma = sigma_s(x, s, cfg.j_probe)?;
    let rate = approx_rate_odd(x, cfg.j_probe)?;
    let r_odd = Some(rate.value);

    // divergence witness: non-vanishing criterion terms among the last half
    let half = sigma.terms.len() / 2;
    let late_terms = &sigma.terms[half..];
    let big_late = late_terms.iter().filter(|t| t.1 > cfg.divergence_threshold).count();
    let all_big = sigma.terms.iter().filter(|t| t.1 > cfg.divergence_threshold).count();
    let max_late =
        late_terms.iter().map(|t| t.1).fold(0.0, f64::max);
    let limsup_positive = all_big >= cfg.divergence_count
        && big_late >= 1
        && matches!(sigma.verdict, TailVerdict::Infinite | TailVerdict::Unknown);

    if s == 1.0 {
        let tag = match sigma.verdict {
            TailVerdict::Finite => VerdictTag::Converges,
            TailVerdict::Infinite if limsup_positive => VerdictTag::Diverges,
            _ => VerdictTag::Boundary,
        };
        let witness = if tag == VerdictTag::Diverges { max_late } else { sigma.partial };
        return Ok(ConvergenceVerdict { tag, witness, r_odd });
    }

    let r_crit = 1.0 / (1.0 - s);
    let lo = r_crit * (1.0 - cfg.boundary_rel_tol);
    let hi = r_crit * (1.0 + cfg.boundary_rel_tol);
    let tag = if rate.value < lo {
        VerdictTag::Converges
    } else if rate.value > hi {
        if limsup_positive {
            VerdictTag::Diverges
        } else {
            VerdictTag::Boundary
        }
    } else {
        match sigma.verdict {
            TailVerdict::Finite => VerdictTag::Converges,
            TailVerdict::Infinite if limsup_positive => VerdictTag::Diverges,
            _ => VerdictTag::Boundary,
        }
    };
    let witness = if tag == VerdictTag::Diverges { max_late } else { sigma.partial };
    Ok(ConvergenceVerdict { tag, witness, r_odd })
}

/// Constructor realizing a prescribed approximation rate (alias of
/// `RealPoint::with_rate`).
pub fn construct_rate_point(rate: f64, seed: i64) -> Result<RealPoint> {
    RealPoint::with_rate(rate, seed)
}

/// Hausdorff dimension of the level set { x : r_odd(x) = r }: 2/r, with the
/// convention 0 at r = infinity.
pub fn jarnik_dim(r: f64) -> Result<f64> {
    if r.is_infinite() && r > 0.0 {
        return Ok(0.0);
    }
    if !(r >= 2.0) {
        return Err(Error::InvalidParameter(format!("rate {r} < 2 has an empty level set")));
    }
    Ok(2.0 / r)
}

// --- point mini-language --------------------------------------------------

/// Parse the point mini-language:
/// `rat:p/q`, `quad:(a+b*sqrt(d))/c` with optional integer shift `+k`/`-k`,
/// `cf:[a0;a1,a2,...]`, `rate:r=<real>,seed=<int>`.
pub fn parse_point(text: &str) -> Result<RealPoint> {
    let text = text.trim();
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("missing point kind prefix in {text:?}")))?;
    match kind {
        "rat" => {
            let (p, q) = rest
                .split_once('/')
                .ok_or_else(|| Error::Parse(format!("expected p/q in {rest:?}")))?;
            let p: i128 = p.trim().parse().map_err(|_| Error::Parse(format!("bad integer {p:?}")))?;
            let q: i128 = q.trim().parse().map_err(|_| Error::Parse(format!("bad integer {q:?}")))?;
            RealPoint::rational_big(BigInt::from(p), BigInt::from(q))
        }
        "quad" => parse_quad(rest),
        "cf" => {
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| Error::Parse(format!("expected [a0;a1,...] in {rest:?}")))?;
            let (a0, tail) = match inner.split_once(';') {
                Some((a0, tail)) => (a0, Some(tail)),
                None => (inner, None),
            };
            let mut digits: Vec<i64> =
                vec![a0.trim().parse().map_err(|_| Error::Parse(format!("bad digit {a0:?}")))?];
            if let Some(tail) = tail {
                for d in tail.split(',') {
                    digits.push(
                        d.trim().parse().map_err(|_| Error::Parse(format!("bad digit {d:?}")))?,
                    );
                }
            }
            RealPoint::explicit_cf(digits)
        }
        "rate" => {
            let mut rate = None;
            let mut seed = 0i64;
            for part in rest.split(',') {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("expected key=value in {part:?}")))?;
                match k.trim() {
                    "r" => {
                        rate = Some(
                            v.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::Parse(format!("bad rate {v:?}")))?,
                        )
                    }
                    "seed" => {
                        seed = v
                            .trim()
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad seed {v:?}")))?
                    }
                    other => return Err(Error::Parse(format!("unknown rate parameter {other:?}"))),
                }
            }
            let rate = rate.ok_or_else(|| Error::Parse("rate point needs r=<real>".into()))?;
            RealPoint::with_rate(rate, seed)
        }
        other => Err(Error::Parse(format!("unknown point kind {other:?}"))),
    }
}

/// `(a+b*sqrt(d))/c` with an optional trailing integer shift, e.g.
/// `(0+1*sqrt(2))/1-1` for sqrt(2)-1.
fn parse_quad(rest: &str) -> Result<RealPoint> {
    let err = || Error::Parse(format!("expected (a+b*sqrt(d))/c[+-k], got {rest:?}"));
    let rest = rest.trim();
    let inner_end = rest.find(')').ok_or_else(err)?;
    // the surd's own closing paren comes first; find the tuple close
    let close = rest[inner_end + 1..].find(')').map(|i| i + inner_end + 1).ok_or_else(err)?;
    let tuple = rest.strip_prefix('(').ok_or_else(err)?;
    let tuple = &tuple[..close - 1];
    let after = &rest[close + 1..];
    let after = after.strip_prefix('/').ok_or_else(err)?;

    // split a +/- b*sqrt(d): find the sign separating a from the surd term
    let star = tuple.find("*sqrt(").ok_or_else(err)?;
    let sign_pos = tuple[..star].rfind(['+', '-']).ok_or_else(err)?;
    let a: i64 = tuple[..sign_pos].trim().parse().map_err(|_| err())?;
    let b_mag: i64 = tuple[sign_pos + 1..star].trim().parse().map_err(|_| err())?;
    let b = if tuple.as_bytes()[sign_pos] == b'-' { -b_mag } else { b_mag };
    let d_text = tuple[star + "*sqrt(".len()..].strip_suffix(')').ok_or_else(err)?;
    let d: u64 = d_text.trim().parse().map_err(|_| err())?;

    // denominator, then optional shift
    let shift_pos = after[1..].find(['+', '-']).map(|i| i + 1);
    let (c_text, shift) = match shift_pos {
        Some(i) => (&after[..i], after[i..].parse::<i64>().map_err(|_| err())?),
        None => (after, 0),
    };
    let c: i64 = c_text.trim().parse().map_err(|_| err())?;
    let point = RealPoint::quadratic(a + shift * c, b, d, c)?;
    Ok(point)
}
