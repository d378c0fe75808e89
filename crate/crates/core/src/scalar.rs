//! Scalar support: a generic float trait for the quadrature/fitting layers
//! and a double-double (`Dd`) type used wherever native `f64` precision is
//! not enough (offsets x - p/q, phase reduction of n^2*x mod 1, the phases
//! m^2/(2q^2 h) appearing in Gauss-sum tails).
//!
//! `Dd` is an unevaluated sum hi + lo with |lo| <= ulp(hi)/2, giving roughly
//! 106 bits of significand. Only the operations this crate needs are
//! implemented.

use num_complex::Complex64;
use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Floating scalar the generic numeric layers (quadrature panels, window
/// evaluation, log-log fitting) are written against. `f64` is the working
/// type everywhere in this crate; `f32` is supported for callers that want
/// a cheaper scalar.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b| or a == 0
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = f64::mul_add(a, b, -p);
    (p, e)
}

/// Double-double value hi + lo.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    /// Relative rounding unit of a normalized double-double.
    pub const EPS: f64 = 1.232_595_164_407_831e-32; // 2^-106

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn from_f64(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn from_i64(v: i64) -> Self {
        // |v| < 2^53 is exact in the hi word alone; otherwise split.
        let hi = v as f64;
        let lo = (v - hi as i64) as f64;
        Dd::new(hi, lo)
    }

    pub fn from_u64(v: u64) -> Self {
        let hi = v as f64;
        let lo = (v as i128 - hi as i128) as f64;
        Dd::new(hi, lo)
    }

    /// Conversion from u128, exact to within 2^-107 relative error.
    pub fn from_u128(v: u128) -> Self {
        let hi = v as f64;
        debug_assert!(hi.is_finite());
        let lo = (v as i128).wrapping_sub(hi as i128) as f64;
        Dd::new(hi, lo)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }

    #[inline]
    pub fn is_sign_negative(self) -> bool {
        self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0)
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, b);
        let (s, e) = quick_two_sum(p1, p2 + self.lo * b);
        Dd { hi: s, lo: e }
    }

    pub fn div_f64(self, b: f64) -> Self {
        self / Dd::from_f64(b)
    }

    pub fn recip(self) -> Self {
        Dd::ONE / self
    }

    pub fn sqrt(self) -> Self {
        if self.is_zero() {
            return Dd::ZERO;
        }
        debug_assert!(self.hi > 0.0, "sqrt of negative double-double");
        let mut y = Dd::from_f64(self.hi.sqrt());
        // two Newton steps: y <- (y + x/y)/2
        for _ in 0..2 {
            y = (y + self / y).mul_f64(0.5);
        }
        y
    }

    pub fn floor(self) -> Self {
        let f = self.hi.floor();
        if f < self.hi {
            Dd { hi: f, lo: 0.0 }
        } else {
            // hi already integral; the fractional information is in lo
            let g = self.lo.floor();
            Dd::new(f, g)
        }
    }

    /// Fractional part reduced into [0, 1).
    pub fn frac(self) -> Self {
        let mut r = self - self.floor();
        if r.hi >= 1.0 {
            r = r - Dd::ONE;
        }
        if r.hi < 0.0 {
            r = r + Dd::ONE;
        }
        r
    }

    /// Remainder modulo `m` (m > 0), in [0, m).
    pub fn rem_pos(self, m: f64) -> Self {
        let q = (self / Dd::from_f64(m)).floor();
        let mut r = self - q.mul_f64(m);
        if r.hi >= m {
            r = r - Dd::from_f64(m);
        }
        if r.is_sign_negative() {
            r = r + Dd::from_f64(m);
        }
        r
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + self.hi * b.lo + self.lo * b.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = (r.hi + r.lo) / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = (r.hi + r.lo) / b.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::new(s, e + q3)
    }
}

impl PartialEq for Dd {
    fn eq(&self, other: &Self) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd::from_f64(v)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

/// e^{2*pi*i*phi} for a double-double phase, accurate to ~1 ulp of the
/// complex result. The lo word enters through a first-order rotation, which
/// is exact to O(lo^2) < 2^-107.
pub fn unit_phase(phi: Dd) -> Complex64 {
    let f = phi.frac();
    let ang = std::f64::consts::TAU * f.hi;
    let (s, c) = ang.sin_cos();
    let d = std::f64::consts::TAU * f.lo;
    Complex64::new(c - s * d, s + c * d)
}
