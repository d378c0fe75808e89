//! Smooth cutoff windows used by the windowed sums and the stationary-phase
//! machinery.
//!
//! Everything is built from one C-infinity step
//!
//!     S(u) = int_0^u exp(-1/(v(1-v))) dv / int_0^1 exp(-1/(v(1-v))) dv,
//!
//! the bump
//!
//!     eta(t) = S(2t-1) on [1/2,1],  1 - S(t-1) on [1,2],  0 elsewhere,
//!
//! which satisfies eta(t) = 1 - eta(t/2) exactly for t in [1,2], and the
//! plateau function psi(u) = sum_{k>=2} eta(2^k u): zero for u < 0, equal
//! to 1 on (0, 1/4], equal to eta(4u) on [1/4, 1/2], zero past 1/2. At the
//! cutoff point u = 0 the series value is replaced by the half-weight
//! convention psi(0) = 1/2, matching the trapezoid treatment of sharp sum
//! boundaries elsewhere in the crate.

use crate::quad;
use crate::scalar::Real;
use std::sync::OnceLock;

/// Window shapes available to the windowed sums.
///
/// `PsiTilde` is realized as `Indicator12 - PsiLeft - PsiRight` on [1, 2];
/// the partition identity is therefore exact by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Window {
    /// The bump eta, supported on [1/2, 2].
    Eta,
    /// psi(t - 1), rising cutoff supported on [1, 3/2].
    PsiLeft,
    /// psi(2 - t), falling cutoff supported on [3/2, 2].
    PsiRight,
    /// Smooth interior bump supported on [5/4, 7/4].
    PsiTilde,
    /// Sharp indicator of [1, 2] with half weight at the endpoints.
    Indicator12,
}

impl Window {
    /// Closed support interval (integration range for transforms).
    pub fn support(self) -> (f64, f64) {
        match self {
            Window::Eta => (0.5, 2.0),
            Window::PsiLeft => (1.0, 1.5),
            Window::PsiRight => (1.5, 2.0),
            Window::PsiTilde => (1.25, 1.75),
            Window::Indicator12 => (1.0, 2.0),
        }
    }

    pub fn is_smooth(self) -> bool {
        !matches!(self, Window::Indicator12)
    }

    /// Evaluate the window at `t`.
    pub fn eval<R: Real>(self, t: R) -> R {
        let tf = t.to_f64().unwrap_or(f64::NAN);
        R::from_f64_lossy(self.eval_f64(tf))
    }

    pub fn eval_f64(self, t: f64) -> f64 {
        match self {
            Window::Eta => eta(t),
            Window::PsiLeft => psi(t - 1.0),
            Window::PsiRight => psi(2.0 - t),
            Window::PsiTilde => {
                if (1.0..=2.0).contains(&t) {
                    indicator12(t) - psi(t - 1.0) - psi(2.0 - t)
                } else {
                    0.0
                }
            }
            Window::Indicator12 => indicator12(t),
        }
    }
}

fn indicator12(t: f64) -> f64 {
    if t == 1.0 || t == 2.0 {
        0.5
    } else if t > 1.0 && t < 2.0 {
        1.0
    } else {
        0.0
    }
}

/// The bump eta.
pub fn eta(t: f64) -> f64 {
    if t <= 0.5 || t >= 2.0 {
        0.0
    } else if t <= 1.0 {
        smooth_step(2.0 * t - 1.0)
    } else {
        1.0 - smooth_step(t - 1.0)
    }
}

/// The plateau psi (half-weight convention at u = 0).
pub fn psi(u: f64) -> f64 {
    if u < 0.0 || u > 0.5 {
        0.0
    } else if u == 0.0 {
        0.5
    } else if u <= 0.25 {
        1.0
    } else {
        eta(4.0 * u)
    }
}

fn mollifier(v: f64) -> f64 {
    if v <= 0.0 || v >= 1.0 {
        0.0
    } else {
        (-1.0 / (v * (1.0 - v))).exp()
    }
}

const STEP_CELLS: usize = 4096;

struct StepTable {
    cumulative: Vec<f64>, // cumulative integral at cell boundaries, unnormalized
    total: f64,
}

fn step_table() -> &'static StepTable {
    static TABLE: OnceLock<StepTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut cumulative = Vec::with_capacity(STEP_CELLS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..STEP_CELLS {
            let a = k as f64 / STEP_CELLS as f64;
            let b = (k + 1) as f64 / STEP_CELLS as f64;
            acc += quad::integrate(mollifier, a, b, 15);
            cumulative.push(acc);
        }
        StepTable { cumulative, total: acc }
    })
}

/// The normalized smooth step S: S(0) = 0, S(1) = 1, C-infinity, flat at
/// both endpoints.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let table = step_table();
    let pos = u * STEP_CELLS as f64;
    let cell = (pos.floor() as usize).min(STEP_CELLS - 1);
    let a = cell as f64 / STEP_CELLS as f64;
    let partial = quad::integrate(mollifier, a, u, 7);
    (table.cumulative[cell] + partial) / table.total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_endpoints_and_symmetry() {
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        for k in 1..20 {
            let u = k as f64 / 20.0;
            let sym = smooth_step(u) + smooth_step(1.0 - u);
            assert!((sym - 1.0).abs() < 1e-13, "u = {u}, sym = {sym}");
        }
    }

    #[test]
    fn eta_endpoints() {
        assert_eq!(eta(0.5), 0.0);
        assert_eq!(eta(1.0), 1.0);
        assert_eq!(eta(2.0), 0.0);
        assert_eq!(eta(0.4), 0.0);
        assert_eq!(eta(2.3), 0.0);
    }

    #[test]
    fn eta_partition_identity_on_unit_octave() {
        // eta(t) + eta(2t) = 1 for t in [1/2, 1]
        for k in 0..=1000 {
            let t = 0.5 + 0.5 * k as f64 / 1000.0;
            let s = eta(t) + eta(2.0 * t);
            assert!((s - 1.0).abs() < 1e-12, "t = {t}, s = {s}");
        }
    }

    #[test]
    fn psi_plateau_and_cutoff() {
        assert_eq!(psi(-0.1), 0.0);
        assert_eq!(psi(0.0), 0.5);
        assert_eq!(psi(0.1), 1.0);
        assert_eq!(psi(0.25), 1.0);
        assert_eq!(psi(0.49), eta(1.96));
        assert_eq!(psi(0.51), 0.0);
    }

    #[test]
    fn three_windows_partition_the_indicator() {
        // interior grid of (1, 2)
        for k in 1..1000 {
            let t = 1.0 + k as f64 / 1000.0;
            let s = Window::PsiLeft.eval_f64(t)
                + Window::PsiRight.eval_f64(t)
                + Window::PsiTilde.eval_f64(t);
            assert!((s - 1.0).abs() < 1e-12, "t = {t}, s = {s}");
        }
        // vanishing outside [1/2, 5/2]
        for t in [0.2, 0.9, 2.1, 2.6] {
            let s = Window::PsiLeft.eval_f64(t)
                + Window::PsiRight.eval_f64(t)
                + Window::PsiTilde.eval_f64(t);
            assert_eq!(s, 0.0, "t = {t}");
        }
    }

    #[test]
    fn psi_tilde_is_an_interior_bump() {
        assert_eq!(Window::PsiTilde.eval_f64(1.0), 0.0);
        assert_eq!(Window::PsiTilde.eval_f64(1.2), 0.0);
        assert!((Window::PsiTilde.eval_f64(1.5) - 1.0).abs() < 1e-12);
        assert_eq!(Window::PsiTilde.eval_f64(1.8), 0.0);
        assert_eq!(Window::PsiTilde.eval_f64(2.0), 0.0);
    }

    #[test]
    fn eighth_order_differences_stay_bounded_at_joins() {
        // central 8th-order difference quotient of eta across the panel
        // joins; for a C^8 function the quotient approaches a finite limit,
        // so halving the step must not blow it up.
        let coeffs = [1.0, -8.0, 28.0, -56.0, 70.0, -56.0, 28.0, -8.0, 1.0];
        for t0 in [0.5, 1.0, 2.0] {
            let mut prev: Option<f64> = None;
            for h in [1e-2, 5e-3, 2.5e-3] {
                let mut acc = 0.0;
                for (i, c) in coeffs.iter().enumerate() {
                    acc += c * eta(t0 + (i as f64 - 4.0) * h);
                }
                let quotient = acc / h.powi(8);
                if let Some(p) = prev {
                    assert!(
                        quotient.abs() <= 4.0 * p.abs() + 1.0,
                        "t0 = {t0}, h = {h}: {quotient} vs prev {p}"
                    );
                }
                prev = Some(quotient.abs().max(1.0));
            }
        }
    }

    #[test]
    fn generic_eval_matches_f64() {
        let a: f32 = Window::Eta.eval(0.75f32);
        let b = Window::Eta.eval_f64(0.75);
        assert!((a as f64 - b).abs() < 1e-6);
    }
}
