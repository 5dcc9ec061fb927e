//! Flat `key = value` configuration files.
//!
//! Blank lines and everything after `#` are ignored. Keys use dotted
//! prefixes (`params.sigma`, `grid.t_end`, `sweep.ranges.rho`). Unknown keys
//! are rejected so typos surface as errors; keys under `result.` are
//! skipped, which lets an eval metadata file be fed back in as a config.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lucaslab_core::sweep::{InitialSampling, Interval, ParamRanges, SweepConfig};
use lucaslab_core::{CalibrationMode, CrraParams, Family, LogParams, ModelParams, ModelTag, TimeGrid, Tolerance};

use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "model",
    "family",
    "calibration",
    "params.sigma",
    "params.rho",
    "params.beta",
    "params.gamma",
    "params.pi",
    "params.delta",
    "params.A",
    "init.k0",
    "init.h0",
    "init.u0",
    "init.c0",
    "init.balanced_growth",
    "init.z0_scale",
    "grid.t_start",
    "grid.t_end",
    "grid.points",
    "tol.abs",
    "tol.rel",
    "tol.max_subdivisions",
    "output.path",
    "verify.checks",
    "verify.limits",
    "sweep.n_samples",
    "sweep.seed",
    "sweep.balanced_growth",
    "sweep.k0",
    "sweep.ranges.sigma",
    "sweep.ranges.rho",
    "sweep.ranges.beta",
    "sweep.ranges.gamma",
    "sweep.ranges.pi",
    "sweep.ranges.delta",
    "sweep.ranges.A",
    "sweep.ranges.k0",
    "sweep.ranges.h0",
    "sweep.ranges.u0",
];

const IGNORED_PREFIX: &str = "result.";

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parsed key/value pairs with the line each came from.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {line_no}: expected key = value")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(config_err(format!("line {line_no}: empty key")));
            }
            if key.starts_with(IGNORED_PREFIX) {
                continue;
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(config_err(format!("line {line_no}: unknown key `{key}`")));
            }
            if entries.insert(key.to_string(), (value.trim().to_string(), line_no)).is_some() {
                return Err(config_err(format!("line {line_no}: duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn parsed<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| config_err(format!("line {line}: `{key}` must be {what}, got `{v}`"))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.parsed(key, "a number")
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, CliError> {
        self.f64(key)?.ok_or_else(|| config_err(format!("missing key `{key}`")))
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.parsed(key, "a non-negative integer")
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.parsed(key, "a non-negative integer")
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.parsed(key, "true or false")
    }

    /// Comma-separated list; an empty value gives an empty list.
    pub fn list(&self, key: &str) -> Option<Vec<&str>> {
        self.get_str(key)
            .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect())
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(items) = self.list(key) else { return Ok(None) };
        items
            .iter()
            .map(|s| s.parse().map_err(|_| config_err(format!("`{key}`: `{s}` is not a number"))))
            .collect::<Result<_, _>>()
            .map(Some)
    }

    /// `lo, hi` or a single value meaning a degenerate interval.
    pub fn interval(&self, key: &str) -> Result<Option<Interval>, CliError> {
        let Some(values) = self.f64_list(key)? else { return Ok(None) };
        match values.as_slice() {
            [x] => Ok(Some(Interval::point(*x))),
            [lo, hi] => Ok(Some(Interval::new(*lo, *hi))),
            _ => Err(config_err(format!("`{key}` must be `lo, hi` or a single value"))),
        }
    }

    pub fn model_tag(&self) -> Result<ModelTag, CliError> {
        match self.get_str("model") {
            Some("crra") => Ok(ModelTag::Crra),
            Some("log") => Ok(ModelTag::Log),
            Some(other) => Err(config_err(format!("model must be crra or log, got `{other}`"))),
            None => Err(config_err("missing key `model`")),
        }
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        Ok(match self.model_tag()? {
            ModelTag::Crra => ModelParams::Crra(CrraParams {
                sigma: self.require_f64("params.sigma")?,
                rho: self.require_f64("params.rho")?,
                beta: self.require_f64("params.beta")?,
                gamma: self.require_f64("params.gamma")?,
                pi: self.require_f64("params.pi")?,
                delta: self.require_f64("params.delta")?,
            }),
            ModelTag::Log => ModelParams::Log(LogParams {
                rho: self.require_f64("params.rho")?,
                beta: self.require_f64("params.beta")?,
                a: self.require_f64("params.A")?,
                delta: self.require_f64("params.delta")?,
            }),
        })
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        let t0 = self.f64("grid.t_start")?.unwrap_or(0.0);
        let t1 = self.f64("grid.t_end")?.unwrap_or(50.0);
        let n = self.usize("grid.points")?.unwrap_or(501);
        TimeGrid::uniform(t0, t1, n).map_err(|e| config_err(format!("grid: {e}")))
    }

    pub fn tolerance(&self) -> Result<Tolerance, CliError> {
        let d = Tolerance::default();
        Tolerance::new(
            self.f64("tol.abs")?.unwrap_or(d.abs_tol),
            self.f64("tol.rel")?.unwrap_or(d.rel_tol),
            self.usize("tol.max_subdivisions")?.unwrap_or(d.max_subdivisions),
        )
        .map_err(|e| config_err(format!("tolerance: {e}")))
    }

    pub fn output_path(&self) -> Option<PathBuf> {
        self.get_str("output.path").filter(|s| !s.is_empty()).map(PathBuf::from)
    }

    pub fn family(&self) -> Result<Option<Family>, CliError> {
        match self.get_str("family") {
            None => Ok(None),
            Some("A" | "a") => Ok(Some(Family::A)),
            Some("B" | "b") => Ok(Some(Family::B)),
            Some(other) => Err(config_err(format!("family must be A or B, got `{other}`"))),
        }
    }

    pub fn calibration(&self) -> Result<Option<CalibrationMode>, CliError> {
        match self.get_str("calibration") {
            None => Ok(None),
            Some("con1") => Ok(Some(CalibrationMode::Con1)),
            Some("conn1") => Ok(Some(CalibrationMode::Conn1)),
            Some("transversality") => Ok(Some(CalibrationMode::Transversality)),
            Some("explicit") => Ok(Some(CalibrationMode::Explicit)),
            Some(other) => Err(config_err(format!(
                "calibration must be con1, conn1, transversality or explicit, got `{other}`"
            ))),
        }
    }

    pub fn init(&self) -> Result<InitSpec, CliError> {
        let z0_scale = self.f64("init.z0_scale")?.unwrap_or(1.0);
        if !(z0_scale.is_finite() && z0_scale > 0.0) {
            return Err(config_err(format!("init.z0_scale must be positive, got {z0_scale}")));
        }
        let c0 = self.f64("init.c0")?;
        let state = if self.bool("init.balanced_growth")?.unwrap_or(false) {
            if self.get_str("init.h0").is_some() || self.get_str("init.u0").is_some() {
                return Err(config_err("init.balanced_growth fixes h0 and u0; remove init.h0 and init.u0"));
            }
            InitialState::BalancedGrowth { k0: self.require_f64("init.k0")? }
        } else {
            InitialState::Values {
                k0: self.require_f64("init.k0")?,
                h0: self.require_f64("init.h0")?,
                u0: self.require_f64("init.u0")?,
            }
        };
        Ok(InitSpec { state, c0, z0_scale })
    }

    pub fn sweep(&self) -> Result<SweepConfig, CliError> {
        let tag = self.model_tag()?;
        let n = self.usize("sweep.n_samples")?.unwrap_or(100);
        let seed = self.u64("sweep.seed")?.unwrap_or(0);
        let mut cfg = SweepConfig::new(tag, n, seed);

        let set = |key: &str, slot: &mut Interval| -> Result<(), CliError> {
            if let Some(iv) = self.interval(key)? {
                *slot = iv;
            }
            Ok(())
        };
        match &mut cfg.ranges {
            ParamRanges::Crra(r) => {
                if self.get_str("sweep.ranges.A").is_some() {
                    return Err(config_err("sweep.ranges.A applies to the log model only"));
                }
                set("sweep.ranges.sigma", &mut r.sigma)?;
                set("sweep.ranges.rho", &mut r.rho)?;
                set("sweep.ranges.beta", &mut r.beta)?;
                set("sweep.ranges.gamma", &mut r.gamma)?;
                set("sweep.ranges.pi", &mut r.pi)?;
                set("sweep.ranges.delta", &mut r.delta)?;
            }
            ParamRanges::Log(r) => {
                for key in ["sweep.ranges.sigma", "sweep.ranges.gamma", "sweep.ranges.pi"] {
                    if self.get_str(key).is_some() {
                        return Err(config_err(format!("{key} applies to the crra model only")));
                    }
                }
                set("sweep.ranges.rho", &mut r.rho)?;
                set("sweep.ranges.beta", &mut r.beta)?;
                set("sweep.ranges.A", &mut r.a)?;
                set("sweep.ranges.delta", &mut r.delta)?;
            }
        }
        if self.bool("sweep.balanced_growth")?.unwrap_or(false) {
            cfg.initial = InitialSampling::BalancedGrowth { k0: self.f64("sweep.k0")?.unwrap_or(1.0) };
        } else if let InitialSampling::Ranges { k0, h0, u0 } = &mut cfg.initial {
            set("sweep.ranges.k0", k0)?;
            set("sweep.ranges.h0", h0)?;
            set("sweep.ranges.u0", u0)?;
        }
        cfg.grid = self.grid()?;
        cfg.tol = self.tolerance()?;
        cfg.limit_horizons = self.limit_horizons()?;
        cfg.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(cfg)
    }

    pub fn limit_horizons(&self) -> Result<Vec<f64>, CliError> {
        let horizons = self.f64_list("verify.limits")?.unwrap_or_else(|| vec![100.0, 200.0, 400.0]);
        let ok = !horizons.is_empty()
            && horizons.iter().all(|t| t.is_finite() && *t > 0.0)
            && horizons.windows(2).all(|w| w[1] > w[0]);
        if ok {
            Ok(horizons)
        } else {
            Err(config_err("verify.limits must be positive and strictly increasing"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Values { k0: f64, h0: f64, u0: f64 },
    BalancedGrowth { k0: f64 },
}

/// Initial values plus the optional explicit `c0` and a `z0` multiplier used
/// for negative controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSpec {
    pub state: InitialState,
    pub c0: Option<f64>,
    pub z0_scale: f64,
}
