//! Calibration probes: measure the actual error scales of the accelerated
//! paths on training grids. The fitted constants are frozen into
//! `Calibration::default()`; re-run these probes after touching the
//! evaluation paths:
//!
//!     cargo test -p lacunary --test calibration -- --ignored --nocapture

use lacunary::asymptotics::{fast_block, fast_diff};
use lacunary::diophantine::{construct_rate_point, convergents, RealPoint};
use lacunary::local_l2::{measure_alpha_diff, rational_center_profile, ScalePlan};
use lacunary::scalar::Dd;
use lacunary::series::{
    audit_block_err, dyadic_block_decomp, eval_ladder, partial_sum_decomp, PointDecomposition,
};
use lacunary::Calibration;
use num_traits::ToPrimitive;

fn calib() -> Calibration {
    Calibration::default()
}

/// Actual accelerated-block error across q and N, against the audit model.
#[test]
#[ignore]
fn probe_block_error_scaling() {
    let c = calib();
    let x = RealPoint::quadratic(-1, 1, 2, 1).unwrap();
    let convs = convergents(&x, 12);
    println!("--- block error at convergent bases of sqrt(2)-1 ---");
    println!("{:>5} {:>8} {:>9} {:>12} {:>12} {:>8}", "s", "q", "N", "err", "model", "ratio");
    for s in [0.6, 0.75, 1.0] {
        for j in [3usize, 5, 7, 9, 11] {
            let cv = &convs[j];
            let q = cv.q.to_u64().unwrap();
            let p = cv.p.to_i64().unwrap();
            for k in [11u32, 13, 15, 17] {
                let n = 1u64 << k;
                if n < q {
                    continue;
                }
                let d = PointDecomposition::new_raw(p, q, cv.h);
                let fast = fast_block(s, n, p, q, cv.h, &c).unwrap();
                let direct = dyadic_block_decomp(s, n, &d);
                let err = (fast.value() - direct.value).norm();
                let model = audit_block_err(s, n as f64, q as f64, &c);
                println!(
                    "{s:>5} {q:>8} 2^{k:<6} {err:>12.3e} {model:>12.3e} {:>8.2}",
                    err / model
                );
            }
        }
    }
    println!("--- block error at small fixed fractions, h = 1e-12 ---");
    for s in [0.6, 0.75, 1.0] {
        for (p, q) in [(1i64, 3u64), (2, 5), (3, 8)] {
            for k in [8u32, 10, 12, 14, 16] {
                let n = 1u64 << k;
                let h = Dd::from_f64(1e-12);
                let d = PointDecomposition::new_raw(p, q, h);
                let fast = fast_block(s, n, p, q, h, &c).unwrap();
                let direct = dyadic_block_decomp(s, n, &d);
                let err = (fast.value() - direct.value).norm();
                let model = audit_block_err(s, n as f64, q as f64, &c);
                println!(
                    "{s:>5} {q:>8} 2^{k:<6} {err:>12.3e} {model:>12.3e} {:>8.2}",
                    err / model
                );
            }
        }
    }
    println!("--- corrected-regime residual at moderate z = 4Nhq ---");
    println!("{:>5} {:>4} {:>8} {:>6} {:>12} {:>12} {:>8}", "s", "q", "N", "z", "err", "model_corr", "ratio");
    for s in [0.6, 0.75, 1.0] {
        for (p, q) in [(1i64, 3u64), (2, 5), (5, 12), (12, 29)] {
            for z in [0.05, 0.2, 0.4] {
                let n = 1u64 << 12;
                let h = Dd::from_f64(z / (4.0 * n as f64 * q as f64));
                let d = PointDecomposition::new_raw(p, q, h);
                let fast = fast_block(s, n, p, q, h, &c).unwrap();
                let direct = dyadic_block_decomp(s, n, &d);
                let err = (fast.value() - direct.value).norm();
                let model = lacunary::series::audit_block_err_corrected(s, n as f64, q as f64, &c);
                println!(
                    "{s:>5} {q:>4} 2^12 {z:>6} {err:>12.3e} {model:>12.3e} {:>8.2}",
                    err / model
                );
            }
        }
    }
}

/// Actual difference-formula error against kappa' (q h)^{s-1/2}.
#[test]
#[ignore]
fn probe_diff_error() {
    let c = calib();
    println!("{:>5} {:>4} {:>10} {:>9} {:>12} {:>12} {:>8}", "s", "q", "h", "N", "err", "(qh)^(s-1/2)", "ratio");
    for s in [0.6, 0.8, 1.0] {
        for (p, q) in [(1i64, 3u64), (2, 5), (5, 29)] {
            for h in [1e-5, 1e-6, 1e-7, 1e-8, 0.15 / (q * q) as f64, 0.24 / (q * q) as f64] {
                let n = (8.0 / (h as f64).sqrt()).min(1e7);
                let n_sum = n as u64;
                let fast = fast_diff(s, n_sum as f64, p, q, Dd::from_f64(h), &c).unwrap();
                let d2 = PointDecomposition::new_raw(p, q, Dd::from_f64(2.0 * h));
                let d1 = PointDecomposition::new_raw(p, q, Dd::from_f64(h));
                let direct =
                    partial_sum_decomp(s, n_sum, &d2).value - partial_sum_decomp(s, n_sum, &d1).value;
                let err = (fast.value - direct).norm();
                let scale = (q as f64 * h).powf(s - 0.5);
                println!(
                    "{s:>5} {q:>4} {h:>10.1e} {n_sum:>9} {err:>12.3e} {scale:>12.3e} {:>8.3}",
                    err / scale
                );
            }
        }
    }
}

/// Envelope ratios |f_main| / min(H^{(s-1)/2}, H |delta|^{(s-3)/2}).
#[test]
#[ignore]
fn probe_fmain_ratio() {
    println!("{:>5} {:>6} {:>12} {:>10}", "s", "H", "delta", "max_ratio");
    for s in [0.6, 0.75, 1.0] {
        for k in [6i32, 10, 14] {
            let h_scale = 2f64.powi(-k);
            for delta in [0.0, h_scale / 8.0, 8.0 * h_scale, 64.0 * h_scale] {
                let mut worst = 0.0f64;
                for mag in [1.0, 1.5, 1.93] {
                    for sign in [1.0, -1.0] {
                        let h = sign * mag * h_scale;
                        let f = lacunary::asymptotics::f_main(s, 4096.0, delta, h).unwrap();
                        let env = {
                            let a = h_scale.powf((s - 1.0) / 2.0);
                            let b = if delta == 0.0 {
                                f64::INFINITY
                            } else {
                                h_scale * delta.abs().powf((s - 3.0) / 2.0)
                            };
                            a.min(b)
                        };
                        worst = worst.max(f.value.norm() / env);
                    }
                }
                println!("{s:>5} 2^-{k:<4} {delta:>12.3e} {worst:>10.4}");
            }
        }
    }
}

/// Divergence witness magnitudes for the rate-3 point at s = 0.6.
#[test]
#[ignore]
fn probe_witness() {
    let x = construct_rate_point(3.0, 1).unwrap();
    let convs = convergents(&x, 8);
    let s = 0.6;
    let eps = 0.1;
    for w in convs.windows(2) {
        let c = &w[0];
        if c.j == 0 {
            continue;
        }
        let qj = c.q.to_f64().unwrap();
        let qj1 = w[1].q.to_f64().unwrap();
        let n_j = ((eps * qj).floor() as u64).max(1);
        let m_j = (2.0 * eps * (qj * qj1).sqrt()).floor() as u64;
        if m_j <= n_j || m_j > 4_000_000 {
            continue;
        }
        let d = lacunary::series::decompose(&x, (m_j as f64).sqrt());
        let hi = partial_sum_decomp(s, m_j, &d);
        let lo = partial_sum_decomp(s, n_j, &d);
        println!(
            "j={} q={qj:.3e} N={n_j} M={m_j} witness={:.4} parity={:?}",
            c.j,
            (hi.value - lo.value).norm(),
            c.parity
        );
    }
}

/// Normalized rational-center profile at (1,3), s = 0.75.
#[test]
#[ignore]
fn probe_rational_center() {
    let c = calib();
    let scales: Vec<f64> = (10..=20).map(|k| 2f64.powi(-k)).collect();
    let rows = rational_center_profile(0.75, 1, 3, &scales, 64, &c).unwrap();
    for (h, v) in rows {
        println!("H={h:.3e} normalized={v:.5}");
    }
}

/// Dyadic block magnitudes across convergent windows (decay check).
#[test]
#[ignore]
fn probe_block_decrease() {
    for (label, x) in [
        ("sqrt2-1", RealPoint::quadratic(-1, 1, 2, 1).unwrap()),
        ("golden", RealPoint::quadratic(-1, 1, 5, 2).unwrap()),
    ] {
        let convs = convergents(&x, 26);
        for s in [0.6, 0.8, 1.0] {
            let mut line = format!("{label} s={s}: ");
            for w in convs.windows(2) {
                let c = &w[0];
                if c.j < 6 || c.parity == lacunary::diophantine::ParityClass::TwoOdd {
                    continue;
                }
                let qj = c.q.to_f64().unwrap();
                let qj1 = w[1].q.to_f64().unwrap();
                let n = ((qj * qj1).sqrt() / 2.0) as u64;
                if n < 4 || n > 2_000_000 {
                    continue;
                }
                let d = lacunary::series::decompose(&x, (2.0 * n as f64).sqrt());
                let b = dyadic_block_decomp(s, n, &d);
                line.push_str(&format!("j{}:{:.4} ", c.j, b.value.norm()));
            }
            println!("{line}");
        }
    }
}

/// Fast-ladder evaluator against pure direct summation.
#[test]
#[ignore]
fn probe_eval_agreement() {
    let c = calib();
    for (p, q, h) in [(1i64, 3u64, 1e-9), (2, 5, 1e-8), (5, 12, 2e-4)] {
        for prefix in [1u64 << 9, 1 << 10, 1 << 11] {
            let d = PointDecomposition::new_raw(p, q, Dd::from_f64(h));
            let n = 1u64 << 12;
            let fast = eval_ladder(0.75, &d, n, prefix, &c).unwrap();
            let direct = partial_sum_decomp(0.75, n, &d);
            println!(
                "q={q} h={h:.1e} prefix=2^{} dev={:.3e}",
                prefix.trailing_zeros(),
                (fast.value - direct.value).norm()
            );
        }
    }
}

/// Difference-route exponent measurements for the spectrum sample points.
#[test]
#[ignore]
fn probe_alpha_diff() {
    let s = 0.75;
    for r in [2.0, 8.0 / 3.0, 4.0] {
        let x = construct_rate_point(r, 1).unwrap();
        let plan = ScalePlan { j_min: 1, j_max: 12, ..ScalePlan::default() };
        match measure_alpha_diff(&x, s, &plan) {
            Ok(rep) => {
                let slopes: Vec<String> = rep
                    .profile
                    .samples
                    .iter()
                    .map(|smp| format!("j{}:H={:.1e},D={:.4}", smp.j, smp.h_scale, smp.mean))
                    .collect();
                println!(
                    "r={r:.3} predicted={:.4} measured={:?} ({} scales)\n  {}",
                    rep.predicted,
                    rep.measured.as_ref().map(|f| f.slope),
                    rep.profile.samples.len(),
                    slopes.join(" ")
                );
            }
            Err(e) => println!("r={r:.3}: {e}"),
        }
    }
}

/// Non-stationary decay of the windowed transform (controls the resonance
/// expansion truncation).
#[test]
#[ignore]
fn probe_transform_decay() {
    for r in [0.065f64, 1.05] {
        let mut line = format!("R={r}: ");
        for xi in [50.0, 100.0, 200.0, 400.0, 800.0, 1600.0] {
            let v = lacunary::asymptotics::w_hat(r, xi, lacunary::window::Window::Eta).unwrap();
            line.push_str(&format!("|w({xi})|={:.2e} ", v.value.norm()));
        }
        println!("{line}");
    }
}

/// Measured truncation tails against the quadrature-aggregated estimate.
#[test]
#[ignore]
fn probe_tail_truth() {
    use lacunary::series::FsEvaluator;
    let x = RealPoint::quadratic(-1, 1, 2, 1).unwrap();
    for s in [0.75, 0.6] {
        let ev = FsEvaluator::new(s, &x, 60, calib());
        let n_ref = 1u64 << 27;
        let base_j = 10; // q_10 = 5741
        for k in [16u32, 18, 20, 22, 24] {
            let n = 1u64 << k;
            let mut worst = 0.0f64;
            for delta in [0.9e-8, -1.3e-8, 1.55e-8] {
                let offset = ev.convs[base_j].h + Dd::from_f64(delta);
                let full = ev.eval_at_base(base_j, offset, n_ref, 1 << 14).unwrap();
                let part = ev.eval_at_base(base_j, offset, n, 1 << 14).unwrap();
                worst = worst.max((full.value - part.value).norm());
            }
            let est = ev.tail_estimate(n as f64);
            println!(
                "s={s} N=2^{k} measured_tail={worst:.4e} estimate={est:.4e} ratio={:.3}",
                worst / est
            );
        }
    }
}

/// End-to-end centered exponent measurement (timed).
#[test]
#[ignore]
fn probe_estimate_alpha() {
    use lacunary::local_l2::estimate_alpha;
    let x = RealPoint::quadratic(-1, 1, 2, 1).unwrap();
    let plan = ScalePlan { j_min: 4, j_max: 10, quad_nodes: 48, max_nodes: 96, ..ScalePlan::default() };
    let t0 = std::time::Instant::now();
    match estimate_alpha(&x, 0.75, &plan) {
        Ok(rep) => {
            println!("predicted = {:.4}", rep.predicted);
            if let Some(f) = &rep.measured {
                println!("measured slope = {:.4} +- {:.4}", f.slope, f.slope_stderr);
            }
            for smp in &rep.profile.samples {
                println!(
                    "  j={} H={:.3e} mean={:.5} N={:.2e} tail={:.3e} audit={} nodes={}",
                    smp.j, smp.h_scale, smp.mean, smp.n_used, smp.tail_est, smp.audit_pass, smp.n_quad
                );
            }
        }
        Err(e) => println!("error: {e}"),
    }
    println!("elapsed: {:.1?}", t0.elapsed());
}

/// Timing breakdown of the centered pipeline pieces.
#[test]
#[ignore]
fn probe_alpha_pieces() {
    use lacunary::local_l2::estimate_alpha;
    use lacunary::series::limit_value_capped;
    let x = RealPoint::quadratic(-1, 1, 2, 1).unwrap();
    let s = 0.75;
    let t0 = std::time::Instant::now();
    let center = limit_value_capped(s, &x, 3.9e-3, 1 << 28, false).unwrap();
    println!(
        "center = {:+.6} {:+.6}i err={:.3e} in {:.1?}",
        center.value.re,
        center.value.im,
        center.err,
        t0.elapsed()
    );
    for j in [4usize, 7, 10] {
        let plan = ScalePlan { j_min: j, j_max: j, quad_nodes: 32, max_nodes: 32, ..ScalePlan::default() };
        let t1 = std::time::Instant::now();
        match estimate_alpha(&x, s, &plan) {
            Ok(rep) => {
                for smp in &rep.profile.samples {
                    println!(
                        "j={} H={:.2e} mean={:.5} N=2^{:.1} tail={:.3e} audit={} [{:.1?}]",
                        smp.j,
                        smp.h_scale,
                        smp.mean,
                        smp.n_used.log2(),
                        smp.tail_est,
                        smp.audit_pass,
                        t1.elapsed()
                    );
                }
            }
            Err(e) => println!("j={j}: {e}"),
        }
    }
}
