//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines are always shown.

use std::time::{Duration, Instant};

use lucaslab_core::equivalence::check_identity;
use lucaslab_core::numerics::{integrate_finite, integrate_ode, integrate_tail};
use lucaslab_core::sweep::{run_sweep, SweepConfig};
use lucaslab_core::verify::{foc_checks, limit_checks, ode_oracle};
use lucaslab_core::{
    Calibration, CalibrationMode, CrraModel, CrraParams, Family, GrowthModel, LogModel, LogParams, ModelTag, TimeGrid,
    Tolerance,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn crra() -> CrraModel {
    CrraModel::new(CrraParams { sigma: 2.0, rho: 0.03, beta: 0.35, gamma: 1.0, pi: 0.02, delta: 0.05 }).unwrap()
}

fn log() -> LogModel {
    LogModel::new(LogParams { rho: 0.03, beta: 0.35, a: 1.0, delta: 0.05 }).unwrap()
}

type Case = (String, Box<dyn GrowthModel>, Family, Calibration);

fn make_crra() -> Box<dyn GrowthModel> {
    Box::new(crra())
}

fn make_log() -> Box<dyn GrowthModel> {
    Box::new(log())
}

/// Every family with the calibration it is defined under, both on and off
/// the balanced growth path.
fn family_calibrations(tol: &Tolerance) -> Vec<Case> {
    let mut out: Vec<Case> = Vec::new();
    for make in [make_crra as fn() -> Box<dyn GrowthModel>, make_log] {
        for family in [Family::A, Family::B] {
            let m = make();
            let mode = match family {
                Family::A => m.condition_mode(),
                Family::B => CalibrationMode::Transversality,
            };
            let bgp = m.balanced_growth(mode, 1.0, tol).unwrap();
            let off = m.calibrate(mode, 1.0, 2.0, 0.6, tol).unwrap();
            out.push((format!("{} {family} bgp", m.tag()), make(), family, bgp));
            out.push((format!("{} {family} off", m.tag()), make(), family, off));
        }
    }
    out
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let tol = Tolerance::default();
    let mut worst: f64 = 0.0;
    for (_, m, family, cal) in family_calibrations(&tol) {
        let p = m.eval(family, &cal, 0.0, &tol).unwrap();
        for (got, want) in [(p.c, cal.c0), (p.k, cal.k0), (p.h, cal.h0), (p.u, cal.u0)] {
            worst = worst.max(rel(got, want));
        }
    }
    Outcome { passed: worst <= 1e-10, detail: format!("max relative error at t=0 = {worst:.2e} (limit 1e-10)") }
}

fn criterion_2() -> Outcome {
    let tol = Tolerance::default();
    let grid = TimeGrid::uniform(0.0, 50.0, 200).unwrap();
    let mut worst: f64 = 0.0;
    let mut all = true;
    for (_, m, family, cal) in family_calibrations(&tol) {
        let r = foc_checks(&*m, family, &cal, &grid, &tol);
        worst = worst.max(r.max_rel_residual);
        all &= r.passed && r.details.len() == 200;
    }
    Outcome { passed: all && worst <= 1e-12, detail: format!("max relative FOC/costate residual = {worst:.2e} (limit 1e-12)") }
}

fn criterion_3() -> Outcome {
    let tol = Tolerance::default();
    let grid = TimeGrid::uniform(0.0, 50.0, 501).unwrap();
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    let mut checked = Vec::new();
    for (name, m, family, cal) in family_calibrations(&tol) {
        // Off the balanced path only the transversality calibration stays
        // admissible over [0, 50]; the con1/conn1 one is reported, not judged.
        let judged = name.ends_with("bgp") || family == Family::B;
        let r = ode_oracle(&*m, family, &cal, &grid, &tol);
        if judged {
            worst = worst.max(r.max_rel_residual);
            checked.push(name.clone());
        } else {
            lines.push(format!("{name}: {:.2e} ({})", r.max_rel_residual, r.note.unwrap_or_default()));
        }
    }
    let m = crra();
    let bgp = m.balanced_growth(CalibrationMode::Con1, 1.0, &tol).unwrap();
    let bad = m.calibrate_at(CalibrationMode::Con1, bgp.k0, bgp.h0, bgp.u0, bgp.z0 * 1.1, &tol).unwrap();
    let control = ode_oracle(&m, Family::A, &bad, &grid, &tol).max_rel_residual;
    Outcome {
        passed: worst < 1e-6 && control > 1e-3,
        detail: format!(
            "max residual over [{}] = {worst:.2e} (limit 1e-6); corrupted z0 control = {control:.2e} (needs > 1e-3); unjudged: {}",
            checked.join(", "),
            lines.join("; ")
        ),
    }
}

fn criterion_4() -> Outcome {
    let tol = Tolerance::default();
    let grid = TimeGrid::uniform(0.0, 50.0, 501).unwrap();
    let mut worst_identity: f64 = 0.0;
    let mut worst_analytic: f64 = 0.0;
    let models: [Box<dyn GrowthModel>; 2] = [Box::new(crra()), Box::new(log())];
    for m in &models {
        let cal = m.balanced_growth(m.condition_mode(), 1.0, &tol).unwrap();
        let r = check_identity(&**m, &cal, &grid, &tol);
        worst_identity = worst_identity.max(r.max_abs_dev);
        let aux = m.aux();
        let zp = aux.z_star.powf(aux.power);
        for ((&t, g), gf) in grid.points().iter().zip(&r.lhs).zip(&r.rhs) {
            let exact = zp * (1.0 - (-aux.g_decay * t).exp()) / aux.g_decay;
            worst_analytic = worst_analytic.max((g - exact).abs()).max((gf - exact).abs());
        }
        if r.failed_points > 0 {
            worst_identity = f64::INFINITY;
        }
    }
    Outcome {
        passed: worst_identity < 1e-9 && worst_analytic < 1e-9,
        detail: format!(
            "max |G_quad - G_from_F| = {worst_identity:.2e}, max gap to constant-z form = {worst_analytic:.2e} (limit 1e-9)"
        ),
    }
}

fn criterion_5() -> Outcome {
    let tol = Tolerance::default();
    let horizons = [100.0, 200.0, 400.0];
    let mut passed = true;
    let mut parts = Vec::new();
    let models: [Box<dyn GrowthModel>; 2] = [Box::new(crra()), Box::new(log())];
    for m in &models {
        let cal = m.balanced_growth(CalibrationMode::Transversality, 1.0, &tol).unwrap();
        let reports = limit_checks(&**m, &cal, &horizons, &tol);
        passed &= reports.iter().all(|r| r.passed);
        parts.push(format!(
            "{}: F gap/bound max {:.2e}, G ratio rel err {:.2e}",
            m.tag(),
            reports[0].max_rel_residual,
            reports[1].max_rel_residual
        ));
        // F(T) → F* also holds off the balanced path.
        let off = m.calibrate(CalibrationMode::Transversality, 1.0, 2.0, 0.6, &tol).unwrap();
        let f = &limit_checks(&**m, &off, &horizons, &tol)[0];
        passed &= f.passed;
        parts.push(format!("{} off-path F gap/bound max {:.2e}", m.tag(), f.max_rel_residual));
    }
    Outcome { passed, detail: parts.join("; ") }
}

fn criterion_6() -> Outcome {
    let cfg = SweepConfig::new(ModelTag::Crra, 100, 2024);
    let start = Instant::now();
    let first = match run_sweep(&cfg) {
        Ok(out) => out,
        Err(e) => return Outcome { passed: false, detail: format!("sweep aborted: {e}") },
    };
    let elapsed = start.elapsed();
    let second = run_sweep(&cfg).expect("rerun");
    let encode = |records: &[lucaslab_core::sweep::SweepRecord]| {
        records.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect::<String>()
    };
    let identical = encode(&first.records) == encode(&second.records);
    let s = &first.summary;
    let q = |q: &lucaslab_core::sweep::Quantiles| {
        let f = |x: Option<f64>| x.map_or("n/a".into(), |v| format!("{v:.2e}"));
        format!("min {} / median {} / max {}", f(q.min), f(q.median), f(q.max))
    };
    let complete = first.records.len() == 100 && s.identity_max_abs_dev.count + s.identity_max_abs_dev.non_finite == 100;
    let gaps_reported = first.records.iter().all(|r| r.c0_rel_gap.is_some() || !r.errors.is_empty());
    Outcome {
        passed: complete && identical && gaps_reported && elapsed < Duration::from_secs(60),
        detail: format!(
            "{} records in {:.1} s, byte-identical rerun: {identical}; identity |dev| {}; c0 con1 vs transversality gap {}; samples with errors {}",
            first.records.len(),
            elapsed.as_secs_f64(),
            q(&s.identity_max_abs_dev),
            q(&s.c0_rel_gap),
            s.samples_with_errors
        ),
    }
}

fn criterion_7() -> Outcome {
    let tol = Tolerance::default();
    let mut worst_ratio: f64 = 0.0;
    let mut check = |got: f64, exact: f64| worst_ratio = worst_ratio.max((got - exact).abs() / tol.allowance(exact));

    for a in [0.01, 0.5, 3.0] {
        for t in [0.5, 10.0, 100.0] {
            check(integrate_finite(|s| (-a * s).exp(), 0.0, t, &tol).unwrap(), (1.0 - (-a * t).exp()) / a);
        }
        check(integrate_tail(|s| (-a * s).exp(), 0.0, a, 1.0, &tol).unwrap(), 1.0 / a);
    }
    check(integrate_finite(|s| s * (-s).exp(), 0.0, 5.0, &tol).unwrap(), 1.0 - 6.0 * (-5.0f64).exp());
    check(integrate_tail(|s| (-0.2 * s).exp() * (1.0 + (-s).exp()), 0.0, 0.2, 2.0, &tol).unwrap(), 5.0 + 1.0 / 1.2);

    let grid = TimeGrid::uniform(0.0, 10.0, 101).unwrap();
    let decay = integrate_ode(|_, y, dy| dy[0] = -0.7 * y[0], &[2.0], &grid, &tol).unwrap();
    let affine = integrate_ode(|_, y, dy| dy[0] = 0.1 * y[0] + 1.0, &[1.0], &grid, &tol).unwrap();
    let rotation = integrate_ode(
        |_, y, dy| {
            dy[0] = y[1];
            dy[1] = -y[0];
        },
        &[1.0, 0.0],
        &grid,
        &tol,
    )
    .unwrap();
    for (i, &t) in grid.points().iter().enumerate() {
        check(decay[i][0], 2.0 * (-0.7 * t).exp());
        check(affine[i][0], 11.0 * (0.1 * t).exp() - 10.0);
        check(rotation[i][0], t.cos());
        check(rotation[i][1], -t.sin());
    }
    Outcome {
        passed: worst_ratio <= 10.0,
        detail: format!("worst error / requested tolerance = {worst_ratio:.2} (limit 10)"),
    }
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, u64);
    let criteria: [Criterion; 7] = [
        ("t=0 exactness", criterion_1, 1),
        ("FOC identities", criterion_2, 1),
        ("ODE oracle", criterion_3, 10),
        ("stationary identity", criterion_4, 5),
        ("limits", criterion_5, 5),
        ("open-question sweep", criterion_6, 120),
        ("quadrature/ODE primitives", criterion_7, 1),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let ok = outcome.passed && in_time;
        if !ok {
            failures += 1;
        }
        println!(
            "{} criterion {}: {name} ({:.2} s, budget {budget} s{}) {}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over budget" },
            outcome.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
