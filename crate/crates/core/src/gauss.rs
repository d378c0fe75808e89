//! Quadratic Gauss sums
//!
//!     tau_m(p/q) = sum_{b=0}^{q-1} e^{2 pi i (p b^2 + m b)/q},
//!     theta_m   = tau_m / sqrt(q),
//!
//! for reduced fractions p/q. The table theta_0..theta_{q-1} is m-periodic
//! with period q, every |theta_m| is at most sqrt(2), and theta_0 vanishes
//! exactly when q = 2 mod 4.
//!
//! Phase arguments are reduced in exact integer arithmetic mod q before any
//! floating-point exponential is taken, and one table of the q-th roots of
//! unity is shared by all terms, so arguments never grow with b.

use crate::diophantine::ParityClass;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, RwLock};

/// Normalized Gauss-sum table for a reduced fraction p/q.
#[derive(Clone, Debug)]
pub struct GaussTheta {
    pub p: u64,
    pub q: u64,
    /// theta_0 .. theta_{q-1}; extend by periodicity for other m.
    pub table: Vec<Complex64>,
    pub parity: ParityClass,
}

impl GaussTheta {
    /// theta_m for any integer m (periodic lookup).
    #[inline]
    pub fn theta(&self, m: i64) -> Complex64 {
        let idx = m.rem_euclid(self.q as i64) as usize;
        self.table[idx]
    }

    pub fn theta0(&self) -> Complex64 {
        self.table[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.table.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn check_reduced(p: i64, q: u64) -> Result<u64> {
    if q == 0 {
        return Err(Error::InvalidParameter("gauss sum needs q >= 1".into()));
    }
    let pm = p.rem_euclid(q as i64) as u64;
    if pm.gcd(&q) != 1 && q != 1 {
        return Err(Error::NotCoprime { p: p.to_string(), q: q.to_string() });
    }
    Ok(pm)
}

/// Shared table of e^{2 pi i k / q}, k = 0..q.
fn roots_of_unity(q: u64) -> Vec<Complex64> {
    let qf = q as f64;
    (0..q)
        .map(|k| {
            let (s, c) = (std::f64::consts::TAU * (k as f64 / qf)).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

/// Direct O(q^2) reference evaluation of the full theta table.
pub fn theta_table_direct(p: u64, q: u64) -> Vec<Complex64> {
    let roots = roots_of_unity(q);
    let mut acc = vec![Complex64::new(0.0, 0.0); q as usize];
    let inv_sqrt_q = 1.0 / (q as f64).sqrt();
    for b in 0..q {
        // p b^2 mod q in exact integer arithmetic
        let b2 = ((b as u128 * b as u128) % q as u128) as u64;
        let r = ((p as u128 * b2 as u128) % q as u128) as u64;
        // residue of (p b^2 + m b) steps by b as m increments
        let mut idx = r as usize;
        let step = b as usize;
        let qs = q as usize;
        for slot in acc.iter_mut() {
            *slot += roots[idx];
            idx += step;
            if idx >= qs {
                idx -= qs;
            }
        }
    }
    for v in &mut acc {
        *v *= inv_sqrt_q;
    }
    acc
}

/// Full theta table through a chirp-z transform (exact phase congruences
/// mod 2q, padded power-of-two FFT). Same definition as the direct path;
/// used for wide exhaustive scans where O(q^2) per fraction is too slow.
pub fn theta_table_chirp(p: u64, q: u64) -> Vec<Complex64> {
    let n = q as usize;
    if n <= 16 {
        return theta_table_direct(p, q);
    }
    // tau_m = e^{i pi m^2/q} * sum_b [x_b e^{i pi b^2/q}] e^{-i pi (m-b)^2/q}
    // with x_b = e^{2 pi i p b^2 / q}; all quadratic phases are exact
    // residues mod 2q.
    let two_q = 2 * q;
    let half_roots = roots_of_unity(two_q); // e^{2 pi i k/(2q)} = e^{i pi k/q}
    let sq_mod = |k: u64| -> usize { ((k as u128 * k as u128) % two_q as u128) as usize };

    let mut fft_n = 1usize;
    while fft_n < 2 * n - 1 {
        fft_n <<= 1;
    }
    let mut a = vec![Complex64::new(0.0, 0.0); fft_n];
    let mut c = vec![Complex64::new(0.0, 0.0); fft_n];
    for b in 0..n {
        let b2 = sq_mod(b as u64);
        let pb2 = ((p as u128 * b2 as u128 % two_q as u128) * 2 % two_q as u128) as usize;
        // x_b = e^{2 pi i p b^2/q} = half_roots[(2 p b^2) mod 2q]
        let x = half_roots[pb2];
        a[b] = x * half_roots[b2];
        let chirp = half_roots[b2].conj();
        c[b] = chirp;
        if b > 0 {
            c[fft_n - b] = chirp; // negative lags
        }
    }
    fft(&mut a, false);
    fft(&mut c, false);
    for (ai, ci) in a.iter_mut().zip(&c) {
        *ai *= *ci;
    }
    fft(&mut a, true);
    let inv_sqrt_q = 1.0 / (q as f64).sqrt();
    (0..n).map(|m| half_roots[sq_mod(m as u64)] * a[m] * inv_sqrt_q).collect()
}

/// Iterative radix-2 FFT; `inverse` includes the 1/n normalization.
fn fft(data: &mut [Complex64], inverse: bool) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    // bit reversal
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * std::f64::consts::TAU / len as f64;
        let wl = Complex64::new(ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = data[start + k];
                let v = data[start + k + len / 2] * w;
                data[start + k] = u + v;
                data[start + k + len / 2] = u - v;
                w *= wl;
            }
        }
        len <<= 1;
    }
    if inverse {
        let scale = 1.0 / n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Normalized Gauss-sum table for p/q, gcd(p, q) = 1.
pub fn gauss_theta(p: i64, q: u64) -> Result<GaussTheta> {
    let pm = check_reduced(p, q)?;
    let table = theta_table_direct(pm, q);
    Ok(GaussTheta { p: pm, q, table, parity: ParityClass::of(&BigInt::from(q)) })
}

type Cache = RwLock<HashMap<(u64, u64), Arc<GaussTheta>>>;

fn cache() -> &'static Cache {
    static CACHE: std::sync::OnceLock<Cache> = std::sync::OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Cached theta table (single-writer insertion, concurrent reads). Large
/// moduli go through the chirp-z evaluator, which computes the same sums
/// in O(q log q); it is validated against the direct reference in tests.
pub fn theta_cached(p: i64, q: u64) -> Result<Arc<GaussTheta>> {
    let pm = check_reduced(p, q)?;
    if let Some(t) = cache().read().unwrap().get(&(pm, q)) {
        return Ok(t.clone());
    }
    let table = if q <= 2048 { theta_table_direct(pm, q) } else { theta_table_chirp(pm, q) };
    let fresh =
        Arc::new(GaussTheta { p: pm, q, table, parity: ParityClass::of(&BigInt::from(q)) });
    let mut w = cache().write().unwrap();
    Ok(w.entry((pm, q)).or_insert(fresh).clone())
}

/// CSV dump of a theta table: columns m, re, im, abs.
pub fn write_theta_csv<W: Write>(theta: &GaussTheta, mut out: W) -> std::io::Result<()> {
    writeln!(out, "m,re,im,abs")?;
    for (m, z) in theta.table.iter().enumerate() {
        writeln!(out, "{m},{:.16e},{:.16e},{:.16e}", z.re, z.im, z.norm())?;
    }
    Ok(())
}
