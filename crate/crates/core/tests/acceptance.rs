//! Acceptance suite: every release-gating property of the simulation, one
//! test per criterion, each printing a PASS/FAIL line (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use berry_core::experiments::{
    run_connection_check, run_equivalence, run_sign_rule, run_sweep, ExperimentConfig,
    ExperimentKind, ExperimentOutput,
};
use berry_core::{
    circle_path, connection_analytic, connection_numeric, diagonal_holonomy, eigenframe,
    gauge_invariant_phase, gauged_holonomy, geometric_phase_exact, solid_angle, wrap_angle,
    AngularVelocity, GaugeFunction, IntegratorConfig, Level, ParameterPath, PolarCoords,
};

fn report(n: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {n} ({name}): {} -- {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn adiabatic_circle() -> ParameterPath {
    circle_path(1.0, FRAC_PI_2, 100.0, 1, 0.0, 4096).unwrap()
}

#[test]
fn criterion_1_adiabatic_berry_phase() {
    let start = Instant::now();
    let path = adiabatic_circle();
    let cfg = IntegratorConfig::with_steps(1 << 16);
    let rep = geometric_phase_exact(&path, 1.0, Level::Minus, &cfg).unwrap();
    let elapsed = start.elapsed();

    let magnitude = rep.geometric_phase_mod_2pi().abs();
    let dev = (magnitude - PI).abs();
    let pass = dev < 0.07 && rep.return_fidelity > 0.999 && elapsed < Duration::from_secs(5);
    report(
        1,
        "adiabatic Berry phase",
        pass,
        &format!(
            "|geometric| = {magnitude:.6} (|Δ| from pi = {dev:.4} < 0.07), fidelity = {:.6} > 0.999, runtime {elapsed:?} < 5s",
            rep.return_fidelity
        ),
    );
}

#[test]
fn criterion_2_near_crossing_triviality() {
    let start = Instant::now();
    let path = circle_path(1e-4, FRAC_PI_2, 100.0, 1, 0.0, 4096).unwrap();
    let cfg = IntegratorConfig::with_steps(1 << 16);
    let rep = geometric_phase_exact(&path, 1.0, Level::Minus, &cfg).unwrap();

    let c0 = berry_core::CVec2::new(
        berry_core::C64::new(1.0, 0.0),
        berry_core::C64::new(0.0, 0.0),
    );
    let (_, phases) = berry_core::evolve_c_basis(&path, 1.0, &c0, &cfg).unwrap();
    let c_mod = wrap_angle(phases.plus_geometric).abs();
    let elapsed = start.elapsed();

    let pass =
        rep.geometric_phase.abs() < 0.05 && c_mod <= 1e-10 && elapsed < Duration::from_secs(5);
    report(
        2,
        "near-crossing triviality",
        pass,
        &format!(
            "|geometric| = {:.3e} < 0.05, |rotated-picture phase mod 2pi| = {c_mod:.2e} <= 1e-10, runtime {elapsed:?} < 5s",
            rep.geometric_phase.abs()
        ),
    );
}

#[test]
fn criterion_3_picture_equivalence() {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Equivalence);
    cfg.integrator.n_steps = 1 << 16;
    let rows = run_equivalence(&cfg).unwrap();
    let elapsed = start.elapsed();

    let worst_at_top = rows
        .iter()
        .filter(|r| r.n_steps == 1 << 16)
        .map(|r| r.max_discrepancy)
        .fold(0.0f64, f64::max);
    // convergence order from the full ladder (2^12 -> 2^16) wherever the
    // discrepancy sits above the round-off floor
    let mut orders = Vec::new();
    for label in rows.iter().map(|r| r.path_label.clone()).collect::<std::collections::BTreeSet<_>>() {
        let ladder: Vec<&berry_core::experiments::EquivalenceRow> =
            rows.iter().filter(|r| r.path_label == label).collect();
        let coarse = ladder.first().unwrap();
        let fine = ladder.last().unwrap();
        if fine.max_discrepancy > 1e-10 {
            let steps_ratio = (fine.n_steps as f64 / coarse.n_steps as f64).log2();
            orders.push((
                label,
                (coarse.max_discrepancy / fine.max_discrepancy).log2() / steps_ratio,
            ));
        }
    }
    let order_ok = !orders.is_empty() && orders.iter().all(|(_, o)| (o - 2.0).abs() <= 0.1);
    let pass = worst_at_top < 1e-6 && order_ok && elapsed < Duration::from_secs(30);
    let orders_text: Vec<String> = orders
        .iter()
        .map(|(l, o)| format!("{l}: {o:.3}"))
        .collect();
    report(
        3,
        "exact picture equivalence",
        pass,
        &format!(
            "worst discrepancy at 2^16 = {worst_at_top:.3e} < 1e-6 over {} bundled paths; orders [{}] within 2.0±0.1; runtime {elapsed:?} < 30s",
            rows.len() / 3,
            orders_text.join(", ")
        ),
    );
}

#[test]
fn criterion_4_connection_formula() {
    let start = Instant::now();
    let cfg = ExperimentConfig::new(ExperimentKind::ConnectionCheck);
    let rows = run_connection_check(&cfg).unwrap();
    let fine = rows.iter().find(|r| r.dt == 1e-5).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_herm = 0.0f64;
    for _ in 0..10_000 {
        let theta = rng.gen_range(0.02..PI - 0.02);
        let phi = rng.gen_range(-6.0..6.0);
        let theta_dot = rng.gen_range(-2.0..2.0);
        let phi_dot = rng.gen_range(-2.0..2.0);
        let analytic = connection_analytic(
            theta,
            AngularVelocity { theta_dot, phi_dot },
        );
        worst_herm = worst_herm.max(analytic.hermiticity_error());
        let dt = 1e-5;
        let frame = |th: f64, ph: f64| {
            eigenframe(&PolarCoords { r: 1.0, theta: th, phi: ph }, 0.0, 1.0).unwrap()
        };
        let numeric = connection_numeric(
            &frame(theta - 0.5 * theta_dot * dt, phi - 0.5 * phi_dot * dt),
            &frame(theta + 0.5 * theta_dot * dt, phi + 0.5 * phi_dot * dt),
            dt,
        )
        .unwrap();
        worst_herm = worst_herm.max(numeric.hermiticity_error());
    }
    let elapsed = start.elapsed();

    let pass = fine.max_residual < 1e-8 && worst_herm < 1e-12 && elapsed < Duration::from_secs(5);
    report(
        4,
        "connection formula",
        pass,
        &format!(
            "central-difference residual at dt=1e-5: {:.3e} < 1e-8; worst Hermiticity violation over 10^4 samples: {worst_herm:.3e} < 1e-12; runtime {elapsed:?} < 5s",
            fine.max_residual
        ),
    );
}

#[test]
fn criterion_5_holonomy_arithmetic() {
    let mut worst_h = 0.0f64;
    let mut worst_s = 0.0f64;
    for theta in [FRAC_PI_6, FRAC_PI_2, 2.0 * FRAC_PI_3] {
        for revs in [1u32, 2] {
            let n = if revs == 1 { 4096 } else { 8192 };
            let path = circle_path(1.0, theta, 100.0, revs, 0.0, n).unwrap();
            let expect = PI * (1.0 - theta.cos()) * revs as f64;
            let h = diagonal_holonomy(&path, Level::Minus).unwrap();
            let s = solid_angle(&path).unwrap();
            worst_h = worst_h.max((h - expect).abs());
            worst_s = worst_s.max((s - 2.0 * expect).abs());
        }
    }
    let pass = worst_h < 1e-9 && worst_s < 1e-9;
    report(
        5,
        "holonomy arithmetic",
        pass,
        &format!(
            "max |holonomy - pi(1-cos theta)·revs| = {worst_h:.3e} < 1e-9; max |solid angle - 2x| = {worst_s:.3e} < 1e-9"
        ),
    );
}

#[test]
fn criterion_6_gauge_invariance() {
    let path = circle_path(1.0, FRAC_PI_3, 40.0, 1, 0.15, 4096).unwrap();
    let base = gauge_invariant_phase(&path, 1.0, Level::Minus, None).unwrap();
    let bare = diagonal_holonomy(&path, Level::Minus).unwrap();
    let t_total = path.duration;

    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut worst_inv = 0.0f64;
    let mut worst_shift = 0.0f64;
    for _ in 0..100 {
        let winding: i32 = rng.gen_range(-3..=3);
        let (a1, a2, f1, f2, ph1, ph2): (f64, f64, f64, f64, f64, f64) = (
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(1.0..3.0),
            rng.gen_range(1.0..3.0),
            rng.gen_range(0.0..2.0 * PI),
            rng.gen_range(0.0..2.0 * PI),
        );
        let smooth = move |t: f64| {
            a1 * (f1.round() * 2.0 * PI * t / t_total + ph1).sin()
                + a2 * (f2.round() * 2.0 * PI * t / t_total + ph2).cos()
                + 2.0 * PI * winding as f64 * t / t_total
        };
        let alpha = GaugeFunction::from_fns(&path, smooth, smooth);
        let gauged = gauge_invariant_phase(&path, 1.0, Level::Minus, Some(&alpha)).unwrap();
        worst_inv = worst_inv.max((gauged - base).norm());
        let shifted = gauged_holonomy(&path, Level::Minus, &alpha).unwrap();
        let endpoint = alpha.endpoint_shift(Level::Minus);
        worst_shift = worst_shift.max((shifted - (bare - endpoint)).abs());
    }
    let pass = worst_inv < 1e-9 && worst_shift < 1e-9;
    report(
        6,
        "gauge invariance",
        pass,
        &format!(
            "combined expression invariant to {worst_inv:.3e} < 1e-9 over 100 random gauges; bare holonomy shift equals -(alpha(T)-alpha(0)) to {worst_shift:.3e} < 1e-9"
        ),
    );
}

#[test]
fn criterion_7_sign_rule() {
    let mut adiabatic = ExperimentConfig::new(ExperimentKind::SignRule);
    adiabatic.path.r = 1.0;
    adiabatic.integrator.n_steps = 1 << 14;
    let a = &run_sign_rule(&adiabatic).unwrap()[0];

    let mut near = ExperimentConfig::new(ExperimentKind::SignRule);
    near.path.r = 1e-4;
    near.integrator.n_steps = 1 << 14;
    let b = &run_sign_rule(&near).unwrap()[0];

    let pass = a.holonomy_sign == -1
        && a.continuation_overlap < -0.999
        && !b.sign_flip_observed
        && b.geometric_phase_rad.abs() < 0.05;
    report(
        7,
        "phase-change sign rule",
        pass,
        &format!(
            "adiabatic loop: continuation sign {} (overlap {:.6}); near-crossing loop: no flip, |geometric| = {:.3e} < 0.05, fidelity {:.6}",
            a.holonomy_sign, a.continuation_overlap, b.geometric_phase_rad.abs(), b.return_fidelity
        ),
    );
}

#[test]
fn criterion_8_regime_sweep() {
    let start = Instant::now();
    let cfg = ExperimentConfig::new(ExperimentKind::Sweep);
    let rows = run_sweep(&cfg).unwrap();
    let csv_a = ExperimentOutput::Sweep(rows.clone()).to_csv(cfg.output.precision);
    let csv_b =
        ExperimentOutput::Sweep(run_sweep(&cfg).unwrap()).to_csv(cfg.output.precision);
    let elapsed = start.elapsed();

    let mags: Vec<f64> = rows.iter().map(|r| r.geometric_phase_rad.abs()).collect();
    let monotone = mags.windows(2).all(|w| w[1] > w[0] - 0.02);
    let pass = rows.len() == 25
        && monotone
        && mags[0] < 0.05
        && (mags[24] - PI).abs() < 0.07
        && csv_a == csv_b
        && elapsed < Duration::from_secs(120);
    report(
        8,
        "regime sweep",
        pass,
        &format!(
            "25 points, |geometric| rises {:.4} -> {:.4} monotonically (backslide tolerance 0.02); endpoints ~0 and ~pi; CSV byte-identical across runs: {}; runtime {elapsed:?} < 2min",
            mags[0],
            mags[24],
            csv_a == csv_b
        ),
    );
}
