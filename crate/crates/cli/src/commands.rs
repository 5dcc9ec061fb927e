//! One function per subcommand. Each returns the text for standard output
//! and an exit code, or a [`CliError`] carrying its own exit code.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use lucaslab_core::equivalence::check_identity;
use lucaslab_core::sweep::{run_sweep, SweepError};
use lucaslab_core::verify::{admissibility_scan, foc_checks, limit_checks, ode_oracle, VerificationReport};
use lucaslab_core::{
    AnyModel, Calibration, CalibrationMode, Family, GrowthModel, ModelError, ModelParams, TimeGrid, Tolerance,
};

use crate::config::{InitSpec, InitialState, RawConfig};
use crate::output::{csv, identity_plot_script, json_lines, number, short, sidecar, write_file, KeyValues};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: i32,
}

impl CommandOutput {
    fn new(stdout: String, passed: bool) -> Self {
        Self { stdout, stderr: String::new(), exit_code: if passed { 0 } else { 1 } }
    }
}

/// Common flags of every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub plot: bool,
}

impl Invocation {
    fn output_path(&self, raw: &RawConfig) -> Result<PathBuf, CliError> {
        self.out
            .clone()
            .or_else(|| raw.output_path())
            .ok_or_else(|| CliError::Usage("no output path: pass --out or set output.path".into()))
    }
}

fn build_model(params: &ModelParams) -> Result<AnyModel, CliError> {
    let violations = params.validate();
    if !violations.is_empty() {
        let names: Vec<String> = violations.iter().map(|v| format!("{} ({})", v.constraint, v.detail)).collect();
        return Err(CliError::Config(format!("invalid parameters: {}", names.join("; "))));
    }
    params.build().map_err(|e| CliError::Config(e.to_string()))
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::UnsupportedCalibration { .. } | ModelError::InvalidInitialValues(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Evaluation(other.to_string()),
    }
}

fn default_mode(model: &dyn GrowthModel, family: Family) -> CalibrationMode {
    match family {
        Family::A => model.condition_mode(),
        Family::B => CalibrationMode::Transversality,
    }
}

/// `(k0, h0, u0)` of the configured initial state.
fn initial_values(model: &dyn GrowthModel, init: &InitSpec) -> (f64, f64, f64) {
    match init.state {
        InitialState::Values { k0, h0, u0 } => (k0, h0, u0),
        InitialState::BalancedGrowth { k0 } => {
            let u0 = model.balanced_growth_u();
            (k0, model.aux().z_star * k0 / u0, u0)
        }
    }
}

fn calibrate(model: &dyn GrowthModel, init: &InitSpec, mode: CalibrationMode, tol: &Tolerance) -> Result<Calibration, CliError> {
    let (k0, h0, u0) = initial_values(model, init);
    let z0 = u0 * h0 / k0 * init.z0_scale;
    match (mode, init.c0) {
        (CalibrationMode::Explicit, Some(c0)) => {
            if !(k0 > 0.0 && h0 > 0.0 && u0 > 0.0 && u0 <= 1.0) {
                return Err(CliError::Config(format!("initial values need k0, h0 > 0 and 0 < u0 <= 1 (k0={k0}, h0={h0}, u0={u0})")));
            }
            if !(c0 > 0.0 && c0.is_finite()) {
                return Err(CliError::Config(format!("init.c0 must be positive, got {c0}")));
            }
            model.assemble(mode, k0, h0, u0, z0, c0).map_err(model_error)
        }
        (CalibrationMode::Explicit, None) => Err(CliError::Config("calibration = explicit needs init.c0".into())),
        (_, Some(_)) => Err(CliError::Config("init.c0 is only used with calibration = explicit".into())),
        (mode, None) if init.z0_scale == 1.0 => model.calibrate(mode, k0, h0, u0, tol).map_err(model_error),
        (mode, None) => model.calibrate_at(mode, k0, h0, u0, z0, tol).map_err(model_error),
    }
}

fn fmt_value(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "n/a".into()
    }
}

pub fn validate(inv: &Invocation) -> Result<CommandOutput, CliError> {
    let raw = RawConfig::load(&inv.config)?;
    let params = raw.params()?;
    let violations = params.validate();
    let mut out = format!("model = {}\n", params.tag());
    for name in params.constraints() {
        match violations.iter().find(|v| v.constraint == *name) {
            Some(v) => out.push_str(&format!("FAIL  {name}  ({})\n", v.detail)),
            None => out.push_str(&format!("ok    {name}\n")),
        }
    }
    match params {
        ModelParams::Crra(p) => {
            let r = p.detect_restriction();
            out.push_str(&format!("eta = {}\n", fmt_value(p.eta())));
            out.push_str(&format!("zeta = {}\n", fmt_value(p.zeta())));
            out.push_str(&format!("z_star = {}\n", fmt_value(p.z_star())));
            out.push_str(&format!(
                "restriction_residual = {} (denominator = {}, holds = {})\n",
                fmt_value(r.residual),
                fmt_value(r.denominator),
                r.holds
            ));
        }
        ModelParams::Log(p) => {
            out.push_str(&format!("eta = {}\n", fmt_value(p.eta())));
            out.push_str(&format!("zeta = {}\n", fmt_value(p.rho)));
            out.push_str(&format!("z_star = {}\n", fmt_value(p.z_star())));
            out.push_str("restriction_residual = n/a (crra only)\n");
        }
    }
    Ok(CommandOutput::new(out, violations.is_empty()))
}

fn params_lines(kv: &mut KeyValues, params: &ModelParams) {
    kv.put("model", params.tag());
    match params {
        ModelParams::Crra(p) => {
            kv.num("params.sigma", p.sigma)
                .num("params.rho", p.rho)
                .num("params.beta", p.beta)
                .num("params.gamma", p.gamma)
                .num("params.pi", p.pi)
                .num("params.delta", p.delta);
        }
        ModelParams::Log(p) => {
            kv.num("params.rho", p.rho).num("params.beta", p.beta).num("params.A", p.a).num("params.delta", p.delta);
        }
    }
}

pub fn eval(inv: &Invocation) -> Result<CommandOutput, CliError> {
    let raw = RawConfig::load(&inv.config)?;
    let out_path = inv.output_path(&raw)?;
    let params = raw.params()?;
    let model = build_model(&params)?;
    let family = raw.family()?.ok_or_else(|| CliError::Config("eval needs `family`".into()))?;
    let mode = raw.calibration()?.unwrap_or_else(|| default_mode(&*model, family));
    let init = raw.init()?;
    let (grid, tol) = (raw.grid()?, raw.tolerance()?);
    let cal = calibrate(&*model, &init, mode, &tol)?;

    let rows: Vec<_> = grid.points().par_iter().map(|&t| model.eval(family, &cal, t, &tol)).collect();
    let mut data = Vec::with_capacity(rows.len());
    for (&t, row) in grid.points().iter().zip(rows) {
        match row {
            Ok(p) => data.push([p.t, p.c, p.k, p.h, p.u, p.lambda, p.mu]),
            Err(e) => return Err(CliError::Evaluation(format!("evaluation failed at t = {t}: {e}"))),
        }
    }
    write_file(&out_path, &csv(&["t", "c", "k", "h", "u", "lambda", "mu"], &data))?;

    let mut kv = KeyValues::new();
    kv.comment("lucaslab eval metadata; valid as a config file");
    params_lines(&mut kv, &params);
    kv.put("family", family).put("calibration", mode);
    match init.state {
        InitialState::Values { k0, h0, u0 } => {
            kv.num("init.k0", k0).num("init.h0", h0).num("init.u0", u0);
        }
        InitialState::BalancedGrowth { k0 } => {
            kv.put("init.balanced_growth", true).num("init.k0", k0);
        }
    }
    if let Some(c0) = init.c0 {
        kv.num("init.c0", c0);
    }
    if init.z0_scale != 1.0 {
        kv.num("init.z0_scale", init.z0_scale);
    }
    grid_lines(&mut kv, &grid);
    tol_lines(&mut kv, &tol);
    kv.num("result.k0", cal.k0)
        .num("result.h0", cal.h0)
        .num("result.u0", cal.u0)
        .num("result.c0", cal.c0)
        .num("result.z0", cal.z0)
        .num("result.c1", cal.c1)
        .num("result.f_star", cal.f_star)
        .num("result.condition_residual", model.condition_residual(&cal))
        .put("result.rows", data.len());
    let meta_path = sidecar(&out_path, ".meta");
    write_file(&meta_path, &kv.finish())?;

    let stdout = format!(
        "wrote {} rows to {}\nmetadata in {}\n",
        data.len(),
        out_path.display(),
        meta_path.display()
    );
    Ok(CommandOutput::new(stdout, true))
}

fn grid_lines(kv: &mut KeyValues, grid: &TimeGrid) {
    kv.num("grid.t_start", grid.t_start()).num("grid.t_end", grid.t_end()).put("grid.points", grid.len());
}

fn tol_lines(kv: &mut KeyValues, tol: &Tolerance) {
    kv.num("tol.abs", tol.abs_tol).num("tol.rel", tol.rel_tol).put("tol.max_subdivisions", tol.max_subdivisions);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Check {
    Oracle,
    Foc,
    Limits,
    Admissibility,
}

fn parse_checks(raw: &RawConfig) -> Result<Vec<Check>, CliError> {
    let Some(names) = raw.list("verify.checks") else {
        return Ok(vec![Check::Oracle, Check::Foc, Check::Limits, Check::Admissibility]);
    };
    if names.is_empty() {
        return Err(CliError::Usage("verify.checks is empty; nothing to verify".into()));
    }
    names
        .iter()
        .map(|n| match *n {
            "ode_oracle" | "oracle" => Ok(Check::Oracle),
            "foc" | "foc_checks" => Ok(Check::Foc),
            "limits" | "limit_checks" => Ok(Check::Limits),
            "admissibility" | "admissibility_scan" => Ok(Check::Admissibility),
            other => Err(CliError::Usage(format!(
                "unknown check `{other}` (expected ode_oracle, foc, limits, admissibility)"
            ))),
        })
        .collect()
}

pub fn verify(inv: &Invocation) -> Result<CommandOutput, CliError> {
    let raw = RawConfig::load(&inv.config)?;
    let checks = parse_checks(&raw)?;
    let out_path = inv.output_path(&raw)?;
    let model = build_model(&raw.params()?)?;
    let families = match raw.family()? {
        Some(f) => vec![f],
        None => vec![Family::A, Family::B],
    };
    let explicit_mode = raw.calibration()?;
    let init = raw.init()?;
    let (grid, tol) = (raw.grid()?, raw.tolerance()?);
    let horizons = raw.limit_horizons()?;

    let mut reports: Vec<VerificationReport> = Vec::new();
    for family in families {
        let mode = explicit_mode.unwrap_or_else(|| default_mode(&*model, family));
        let cal = calibrate(&*model, &init, mode, &tol)?;
        for check in &checks {
            match check {
                Check::Oracle => reports.push(ode_oracle(&*model, family, &cal, &grid, &tol)),
                Check::Foc => reports.push(foc_checks(&*model, family, &cal, &grid, &tol)),
                Check::Admissibility => reports.push(admissibility_scan(&*model, family, &cal, &grid, &tol)),
                Check::Limits => {
                    for mut r in limit_checks(&*model, &cal, &horizons, &tol) {
                        r.family = Some(family);
                        reports.push(r);
                    }
                }
            }
        }
    }
    write_file(&out_path, &json_lines(&reports)?)?;

    let mut stdout = String::new();
    for r in &reports {
        let family = r.family.map_or("-".to_string(), |f| f.to_string());
        stdout.push_str(&format!(
            "{} {:<18} family={} max_rel={} tolerance={}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.check_name,
            family,
            number(r.max_rel_residual),
            short(r.tolerance)
        ));
    }
    let all = reports.iter().all(|r| r.passed);
    stdout.push_str(&format!("{} reports written to {}\n", reports.len(), out_path.display()));
    Ok(CommandOutput::new(stdout, all))
}

pub fn identity(inv: &Invocation) -> Result<CommandOutput, CliError> {
    let raw = RawConfig::load(&inv.config)?;
    let out_path = inv.output_path(&raw)?;
    let params = raw.params()?;
    let model = build_model(&params)?;
    let mode = raw.calibration()?.unwrap_or_else(|| model.condition_mode());
    let init = raw.init()?;
    let (grid, tol) = (raw.grid()?, raw.tolerance()?);
    let cal = calibrate(&*model, &init, mode, &tol)?;

    let report = check_identity(&*model, &cal, &grid, &tol);
    let rows: Vec<[f64; 5]> = grid
        .points()
        .iter()
        .zip(report.lhs.iter().zip(&report.rhs))
        .zip(report.abs_devs().zip(report.rel_devs()))
        .map(|((&t, (&g, &gf)), (abs, rel))| [t, g, gf, abs, rel])
        .collect();
    write_file(&out_path, &csv(&["t", "g_quadrature", "g_from_f", "abs_dev", "rel_dev"], &rows))?;

    let mut kv = KeyValues::new();
    kv.comment("lucaslab identity summary");
    params_lines(&mut kv, &params);
    kv.put("calibration", mode)
        .put("data", out_path.display())
        .put("points", grid.len())
        .num("max_abs_dev", report.max_abs_dev)
        .num("max_rel_dev", report.max_rel_dev)
        .num("argmax_t", report.argmax_t)
        .num("rel_floor", report.rel_floor)
        .put("failed_points", report.failed_points)
        .num("condition_residual", report.condition_residual)
        .num("c0", cal.c0)
        .num("z0", cal.z0);
    let summary_path = sidecar(&out_path, ".summary");
    write_file(&summary_path, &kv.finish())?;

    let mut stdout = format!(
        "max_abs_dev = {}\nmax_rel_dev = {}\nargmax_t = {}\nfailed_points = {}\nsummary in {}\n",
        short(report.max_abs_dev),
        short(report.max_rel_dev),
        short(report.argmax_t),
        report.failed_points,
        summary_path.display()
    );
    if inv.plot {
        let script = sidecar(&out_path, ".gp");
        write_file(&script, &identity_plot_script(&out_path, &sidecar(&out_path, ".png")))?;
        stdout.push_str(&format!("plot script in {}\n", script.display()));
    }
    Ok(CommandOutput::new(stdout, true))
}

pub fn sweep(inv: &Invocation) -> Result<CommandOutput, CliError> {
    let raw = RawConfig::load(&inv.config)?;
    let out_path = inv.output_path(&raw)?;
    let cfg = raw.sweep()?;
    let start = Instant::now();
    let result = run_sweep(&cfg).map_err(|e| match e {
        SweepError::InvalidConfig(m) => CliError::Config(m),
        e @ SweepError::RejectionBudgetExceeded { .. } => CliError::Evaluation(e.to_string()),
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    write_file(&out_path, &json_lines(&result.records)?)?;
    let summary_path = sidecar(&out_path, ".summary.json");
    let summary = serde_json::to_string_pretty(&result.summary)
        .map_err(|e| CliError::Evaluation(format!("serialise: {e}")))?;
    write_file(&summary_path, &(summary + "\n"))?;

    let s = &result.summary;
    let fmt_q = |q: &lucaslab_core::sweep::Quantiles| {
        let f = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
        format!("min {} median {} max {} (n={}, non-finite {})", f(q.min), f(q.median), f(q.max), q.count, q.non_finite)
    };
    let stdout = format!(
        "samples = {}\nrejected draws = {}\nsamples with errors = {}\nidentity max_abs_dev: {}\nidentity max_rel_dev: {}\nc0 relative gap (condition vs transversality): {}\noracle A max_rel: {}\noracle B max_rel: {}\nrecords in {}\nsummary in {}\n",
        s.n_samples,
        s.total_rejected_draws,
        s.samples_with_errors,
        fmt_q(&s.identity_max_abs_dev),
        fmt_q(&s.identity_max_rel_dev),
        fmt_q(&s.c0_rel_gap),
        fmt_q(&s.oracle_a_max_rel),
        fmt_q(&s.oracle_b_max_rel),
        out_path.display(),
        summary_path.display(),
    );
    let stderr = format!(
        "sweep wall time {elapsed:.3} s ({:.4} s per sample)\n",
        elapsed / s.n_samples.max(1) as f64
    );
    Ok(CommandOutput { stdout, stderr, exit_code: 0 })
}

