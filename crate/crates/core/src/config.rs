//! Calibration constants and tolerances.
//!
//! The asymptotic formulas used by the fast evaluation paths come with
//! error orders but no explicit constants. The constants below were fitted
//! once on a training grid (see the calibration test target) and are fixed
//! here; the CLI accepts overrides for all of them.

use serde::Serialize;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Calibration {
    /// Constant in the block error model kappa * N^{1/2-s} * max(1, ln q).
    /// This is a generous bound-level constant, not a best fit.
    pub err_kappa: f64,
    /// Constant in the difference-formula error model kappa' * (qh)^{s-1/2}.
    pub diff_kappa: f64,
    /// Fitted scale of the actual block-formula error sqrt(q) N^{-s} when
    /// the first-order boundary sums are *not* applicable (resonant z).
    pub audit_kappa_plain: f64,
    /// Same shape, after the first-order boundary correction.
    pub audit_kappa_corrected: f64,
    /// Fitted scale of the N^{1/2-s} ln q order term (the occasional
    /// window-ladder resonance).
    pub audit_kappa_order: f64,
    /// Constant in the main-term block bound used by the truncation audit.
    pub audit_c_main: f64,
    /// K in the measurement scale rule H_j = |h_j| / K.
    pub k_scale: f64,
    /// Hard threshold on q^2 h below which the difference formula is used.
    pub diff_regime_max: f64,
    /// Divergence-witness shrink factor (N_j = eps * q_j).
    pub witness_epsilon: f64,
    /// Positive constant the divergence witness must exceed.
    pub witness_floor: f64,
    /// Slack added to the error-order slope in the summation check.
    pub slope_tol_summation: f64,
    /// Slack around -3/2 in the stationary-phase order check.
    pub slope_tol_stationary: f64,
    /// Max/min cap for the normalized Gauss-tail L2 averages.
    pub gl2_ratio_cap: f64,
    /// Fitted envelope constant for the two-regime main-term bound.
    pub fmain_envelope_c: f64,
    /// Floor for the normalized rational-center lower bound.
    pub rational_center_floor: f64,
    /// Fraction of the measured mean the certified tail must stay under.
    pub tail_audit_fraction: f64,
    /// Largest convergent denominator the dyadic ladder will use as a
    /// block base (caps boundary-sum cost on long ladders).
    pub window_q_cap: u64,
    /// Default direct-summation prefix of the fast evaluator (rounded up
    /// to a power of two and to at least q).
    pub eval_prefix: u64,
    /// Cap on ladder length: the evaluator refuses N beyond this.
    pub eval_n_cap: u64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            err_kappa: 10.0,
            diff_kappa: 0.6,
            audit_kappa_plain: 1.0,
            audit_kappa_corrected: 0.15,
            audit_kappa_order: 0.002,
            audit_c_main: 0.85,
            k_scale: 8.0,
            diff_regime_max: 0.2,
            witness_epsilon: 0.1,
            witness_floor: 0.05,
            slope_tol_summation: 0.15,
            slope_tol_stationary: 0.2,
            gl2_ratio_cap: 20.0,
            fmain_envelope_c: 4.0,
            rational_center_floor: 0.1,
            tail_audit_fraction: 0.1,
            window_q_cap: 1 << 14,
            eval_prefix: 1 << 13,
            eval_n_cap: 1 << 34,
        }
    }
}
