//! Euler-Maclaurin evaluations of the Hurwitz zeta function and the
//! digamma function on the parameter ranges the rational limit values
//! need: zeta(s, a) for 0 < s < 3/2 (s != 1), psi(a) for 0 < a <= 1.

/// Bernoulli numbers B_2..B_12 over (2j)!.
const B2J_OVER_FACT: [f64; 6] = [
    1.0 / 12.0,                 // B2/2!
    -1.0 / 720.0,               // B4/4!
    1.0 / 30240.0,              // B6/6!
    -1.0 / 1209600.0,           // B8/8!
    1.0 / 47900160.0,           // B10/10!
    -691.0 / 1307674368000.0,   // B12/12!
];

/// Hurwitz zeta; accurate to ~1e-13 for s in (0, 3/2), s != 1, a in (0, 2].
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    debug_assert!(a > 0.0 && s != 1.0);
    let m = 28usize;
    let mut sum = 0.0f64;
    for k in 0..m {
        sum += (k as f64 + a).powf(-s);
    }
    let x = m as f64 + a;
    let mut tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // asymptotic correction sum_j B_{2j}/(2j)! (s)_{2j-1} x^{-s-2j+1}
    let mut poch = s; // rising factorial (s)(s+1)...(s+2j-2)
    let mut xp = x.powf(-s - 1.0);
    for (j, b) in B2J_OVER_FACT.iter().enumerate() {
        tail += b * poch * xp;
        poch *= (s + (2 * j + 1) as f64) * (s + (2 * j + 2) as f64);
        xp /= x * x;
    }
    sum + tail
}

/// Riemann zeta for s in (0, 3/2), s != 1.
pub fn riemann_zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

/// Digamma function for a > 0.
pub fn digamma(a: f64) -> f64 {
    debug_assert!(a > 0.0);
    let mut shift = 0.0f64;
    let mut x = a;
    while x < 24.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // psi(x) ~ ln x - 1/(2x) - sum B_{2j}/(2j x^{2j})
    let mut asym = x.ln() - 0.5 * inv;
    let coeffs = [1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0, 1.0 / 132.0];
    let mut p = inv2;
    for c in coeffs {
        asym -= c * p;
        p *= inv2;
    }
    asym + shift
}
