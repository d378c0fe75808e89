//! Conversions between arbitrary-precision integers and the double-double
//! scalar, plus logarithms of big integers that never overflow f64.

use crate::scalar::Dd;
use num_bigint::BigInt;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// Convert a big integer to double-double. Exact when the value fits in
/// 106 bits; correctly rounded to ~2^-106 relative error otherwise. Values
/// beyond f64 range map to +/- infinity in the hi word.
pub fn big_to_dd(x: &BigInt) -> Dd {
    let hi = x.to_f64().unwrap_or(f64::INFINITY);
    if !hi.is_finite() {
        return Dd { hi: if x.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY }, lo: 0.0 };
    }
    let hi_big = BigInt::from_f64(hi).expect("finite float converts");
    let lo = (x - hi_big).to_f64().unwrap_or(0.0);
    Dd::new(hi, lo)
}

/// Natural logarithm of a positive big integer, exact to f64 precision for
/// any bit length.
pub fn ln_big(x: &BigInt) -> f64 {
    debug_assert!(x.is_positive(), "ln_big needs a positive argument");
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 53;
    let mant = (x >> shift).to_f64().unwrap();
    mant.ln() + shift as f64 * std::f64::consts::LN_2
}

/// log-sum-exp of two values given in log space: ln(e^a + e^b).
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Ratio of two positive big integers as f64, robust to huge operands.
pub fn ratio_big(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    (ln_big(num) - ln_big(den)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn ln_big_matches_f64_for_small_values() {
        for v in [1u64, 2, 3, 1000, 123456789] {
            let b = BigInt::from(v);
            assert!((ln_big(&b) - (v as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn ln_big_handles_thousands_of_bits() {
        let b = BigInt::from(3u32).pow(5000);
        let expected = 5000.0 * 3f64.ln();
        assert!((ln_big(&b) - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn big_to_dd_keeps_106_bits() {
        let b = (BigInt::from(1u64) << 90) + BigInt::from(12345u32);
        let d = big_to_dd(&b);
        // reconstruct exactly
        let back = BigInt::from_f64(d.hi).unwrap() + BigInt::from_f64(d.lo).unwrap();
        assert_eq!(back, b);
    }
}
