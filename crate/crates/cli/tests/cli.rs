use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CRRA_PARAMS: &str = "model = crra
params.sigma = 2.0
params.rho = 0.03
params.beta = 0.35
params.gamma = 1.0
params.pi = 0.02
params.delta = 0.05
";

const STATIONARY_INIT: &str = "init.balanced_growth = true
init.k0 = 1.0
grid.t_end = 50
grid.points = 101
";

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lucaslab"));
    cmd.args(args).env_remove("LUCASLAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn lucaslab")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, name: &str, body: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn cmd(&self, sub: &str, config: &Path, out: Option<&str>) -> Output {
        let cfg = config.to_str().unwrap().to_string();
        let out_path = out.map(|o| self.path(o).to_str().unwrap().to_string());
        let mut args = vec![sub, "--config", cfg.as_str()];
        if let Some(o) = &out_path {
            args.extend(["--out", o.as_str()]);
        }
        run(&args, &[])
    }
}

fn key_values(path: &Path) -> BTreeMap<String, String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.trim().to_string(), v.trim().to_string())
        })
        .collect()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn validate_reports_constraints() {
    let w = Work::new();
    let ok = w.config("ok.conf", CRRA_PARAMS);
    let out = w.cmd("validate", &ok, None);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("ok    sigma != 1"));
    assert!(!text.contains("FAIL"));
    assert!(text.contains("eta = 0.17"));
    assert!(text.contains("zeta = 0.04"));
    assert!(text.contains("restriction_residual"));

    let bad = w.config("bad.conf", &CRRA_PARAMS.replace("sigma = 2.0", "sigma = 1.0"));
    let out = w.cmd("validate", &bad, None);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("FAIL  sigma != 1"));

    let out = w.cmd("validate", &w.path("missing.conf"), None);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_config_and_usage_errors_exit_2() {
    let w = Work::new();
    let typo = w.config("typo.conf", &format!("{CRRA_PARAMS}params.sigmaa = 2\n"));
    assert_eq!(code(&w.cmd("validate", &typo, None)), 2);
    let no_model = w.config("nomodel.conf", "params.rho = 0.03\n");
    assert_eq!(code(&w.cmd("validate", &no_model, None)), 2);
    assert_eq!(code(&run(&["frobnicate"], &[])), 2);
    assert_eq!(code(&run(&["eval"], &[])), 2);

    let ok = w.config("ok.conf", CRRA_PARAMS);
    let out = run(&["validate", "--config", ok.to_str().unwrap()], &[("LUCASLAB_THREADS", "many")]);
    assert_eq!(code(&out), 2);
    let out = run(&["validate", "--config", ok.to_str().unwrap(), "--plot"], &[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn eval_writes_trajectory_and_metadata() {
    let w = Work::new();
    let cfg = w.config("a.conf", &format!("{CRRA_PARAMS}family = A\ninit.k0 = 1.0\ninit.h0 = 2.0\ninit.u0 = 0.6\ngrid.t_end = 1\ngrid.points = 11\n"));
    let out = w.cmd("eval", &cfg, Some("a.csv"));
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let (header, rows) = csv_rows(&w.path("a.csv"));
    assert_eq!(header, "t,c,k,h,u,lambda,mu");
    assert_eq!(rows.len(), 11);
    let meta = key_values(&w.path("a.csv.meta"));
    let get = |k: &str| meta[k].parse::<f64>().unwrap();
    let first = &rows[0];
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * b.abs();
    assert_eq!(first[0], 0.0);
    assert!(close(first[1], get("result.c0")));
    assert!(close(first[2], 1.0));
    assert!(close(first[3], 2.0));
    assert!(close(first[4], 0.6));
    assert!(close(first[6], get("result.c1")));
    assert_eq!(meta["calibration"], "con1");

    let original = std::fs::read(w.path("a.csv")).unwrap();
    let out = w.cmd("eval", &cfg, Some("a.csv"));
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read(w.path("a.csv")).unwrap(), original);

    // The metadata file is itself a valid config.
    let out = w.cmd("eval", &w.path("a.csv.meta"), Some("b.csv"));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(std::fs::read(w.path("b.csv")).unwrap(), original);
}

#[test]
fn eval_failure_names_the_time() {
    let w = Work::new();
    // Slightly below the balanced path: family A's u(t) denominator vanishes
    // before t = 50.
    let cfg = w.config(
        "f.conf",
        &format!("{CRRA_PARAMS}family = A\ninit.k0 = 1.0\ninit.h0 = 0.09983783394138\ninit.u0 = 0.8\ngrid.t_end = 50\ngrid.points = 101\n"),
    );
    let out = w.cmd("eval", &cfg, Some("f.csv"));
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("t = "), "{}", stderr(&out));
    assert!(!w.path("f.csv").exists());

    let missing_out = w.cmd("eval", &cfg, None);
    assert_eq!(code(&missing_out), 2);
}

#[test]
fn verify_exit_codes() {
    let w = Work::new();
    let stationary = w.config("s.conf", &format!("{CRRA_PARAMS}{STATIONARY_INIT}"));
    let out = w.cmd("verify", &stationary, Some("s.jsonl"));
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(w.path("s.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 10);
    for l in &lines {
        for field in ["check_name", "grid", "max_abs_residual", "max_rel_residual", "argmax_t", "passed", "details"] {
            assert!(l.get(field).is_some(), "missing {field}");
        }
    }

    let corrupted = w.config("c.conf", &format!("{CRRA_PARAMS}{STATIONARY_INIT}family = A\ninit.z0_scale = 1.1\n"));
    let out = w.cmd("verify", &corrupted, Some("c.jsonl"));
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("FAIL ode_oracle"));

    let empty = w.config("e.conf", &format!("{CRRA_PARAMS}{STATIONARY_INIT}verify.checks =\n"));
    assert_eq!(code(&w.cmd("verify", &empty, Some("e.jsonl"))), 2);
}

#[test]
fn identity_csv_summary_and_plot() {
    let w = Work::new();
    let cfg = w.config("i.conf", &format!("{CRRA_PARAMS}{STATIONARY_INIT}"));
    let csv_path = w.path("i.csv");
    let out = run(
        &["identity", "--config", cfg.to_str().unwrap(), "--out", csv_path.to_str().unwrap(), "--plot"],
        &[("LUCASLAB_THREADS", "2")],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let summary = key_values(&w.path("i.csv.summary"));
    let max_abs: f64 = summary["max_abs_dev"].parse().unwrap();
    let max_rel: f64 = summary["max_rel_dev"].parse().unwrap();
    let floor: f64 = summary["rel_floor"].parse().unwrap();
    assert!(max_abs < 1e-9);

    let (header, rows) = csv_rows(&csv_path);
    assert_eq!(header, "t,g_quadrature,g_from_f,abs_dev,rel_dev");
    assert_eq!(rows.len(), 101);
    assert_eq!(rows[0][1], 0.0);
    assert!(rows[0][3] < 1e-13);

    // Deviations recomputed from the parsed CSV reproduce the summary exactly.
    let abs = rows.iter().map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max);
    let rel = rows
        .iter()
        .map(|r| (r[1] - r[2]).abs() / r[1].abs().max(r[2].abs()).max(floor))
        .fold(0.0, f64::max);
    assert_eq!(abs, max_abs);
    assert_eq!(rel, max_rel);

    let script = std::fs::read_to_string(w.path("i.csv.gp")).unwrap();
    assert!(script.contains(&format!("'{}'", csv_path.display())));
}

#[test]
fn sweep_is_reproducible() {
    let w = Work::new();
    let body = "model = crra\nsweep.n_samples = 3\nsweep.seed = 11\ngrid.t_end = 10\ngrid.points = 11\n";
    let cfg = w.config("sw.conf", body);
    let out = w.cmd("sweep", &cfg, Some("a.jsonl"));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("wall time"));
    let out = run(
        &["sweep", "--config", cfg.to_str().unwrap(), "--out", w.path("b.jsonl").to_str().unwrap()],
        &[("LUCASLAB_THREADS", "1")],
    );
    assert_eq!(code(&out), 0);
    let a = std::fs::read(w.path("a.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(w.path("b.jsonl")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 3);
    assert_eq!(
        std::fs::read(w.path("a.jsonl.summary.json")).unwrap(),
        std::fs::read(w.path("b.jsonl.summary.json")).unwrap()
    );
}

#[test]
fn sweep_stationary_single_sample() {
    let w = Work::new();
    let body = "model = crra
sweep.n_samples = 1
sweep.ranges.sigma = 2
sweep.ranges.rho = 0.03
sweep.ranges.beta = 0.35
sweep.ranges.gamma = 1
sweep.ranges.pi = 0.02
sweep.ranges.delta = 0.05
sweep.balanced_growth = true
grid.points = 51
";
    let cfg = w.config("one.conf", body);
    let out = w.cmd("sweep", &cfg, Some("one.jsonl"));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(w.path("one.jsonl.summary.json")).unwrap()).unwrap();
    assert!(summary["identity_max_abs_dev"]["max"].as_f64().unwrap() < 1e-9);
}

#[test]
fn sweep_infeasible_ranges_exit_1() {
    let w = Work::new();
    let cfg = w.config("bad.conf", "model = crra\nsweep.n_samples = 1\nsweep.ranges.rho = 0.2, 0.3\nsweep.ranges.delta = 0.01, 0.1\n");
    let out = w.cmd("sweep", &cfg, Some("bad.jsonl"));
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("rejection budget exceeded"), "{}", stderr(&out));
}
