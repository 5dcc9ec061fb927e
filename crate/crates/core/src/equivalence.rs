//! Do the two closed-form families coincide?
//!
//! Equating the `h(t)` expressions of family A and family B yields an
//! expression for `G(t)` in terms of `F(t)` (valid under con1/conn1). Whether
//! that expression equals the quadrature value of `G(t)` is left open in
//! closed form; this module measures the difference along a time grid, and
//! mirrors the comparison at the trajectory level on `(h, u)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{Calibration, Family, GrowthModel, ModelTag};
use crate::numerics::{TimeGrid, Tolerance};

/// Default floor for the relative-deviation denominator.
pub const REL_FLOOR: f64 = 1e-300;

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_deviation(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Denominator floor for the G identity: the quadrature allowance at the
/// scale of the whole `G` path. `G(0) = 0` exactly, so without a floor the
/// rounding noise of the rebuilt side reads as a relative deviation of 1.
pub fn identity_floor(lhs: &[f64], tol: &Tolerance) -> f64 {
    let scale = lhs.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    tol.allowance(scale).max(REL_FLOOR)
}

/// Maxima of `|a - b|` and of the relative deviation over a grid, skipping
/// points where either side is non-finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    #[serde(with = "crate::serde_float")]
    pub max_abs_dev: f64,
    #[serde(with = "crate::serde_float")]
    pub max_rel_dev: f64,
    /// Location of `max_abs_dev`.
    #[serde(with = "crate::serde_float")]
    pub argmax_t: f64,
    pub failed_points: usize,
}

impl DeviationStats {
    pub fn over(times: &[f64], a: &[f64], b: &[f64]) -> Self {
        Self::over_floored(times, a, b, REL_FLOOR)
    }

    pub fn over_floored(times: &[f64], a: &[f64], b: &[f64], floor: f64) -> Self {
        let mut stats = DeviationStats {
            max_abs_dev: f64::NAN,
            max_rel_dev: f64::NAN,
            argmax_t: f64::NAN,
            failed_points: 0,
        };
        for ((&t, &x), &y) in times.iter().zip(a).zip(b) {
            if !(x.is_finite() && y.is_finite()) {
                stats.failed_points += 1;
                continue;
            }
            let abs = (x - y).abs();
            let rel = relative_deviation(x, y, floor);
            if !(abs <= stats.max_abs_dev) {
                stats.max_abs_dev = abs;
                stats.argmax_t = t;
            }
            if !(rel <= stats.max_rel_dev) {
                stats.max_rel_dev = rel;
            }
        }
        stats
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub model_tag: ModelTag,
    pub grid: TimeGrid,
    /// Quadrature `G(t)`.
    pub lhs: Vec<f64>,
    /// `G(t)` rebuilt from `F(t)`.
    pub rhs: Vec<f64>,
    #[serde(with = "crate::serde_float")]
    pub max_abs_dev: f64,
    #[serde(with = "crate::serde_float")]
    pub max_rel_dev: f64,
    #[serde(with = "crate::serde_float")]
    pub argmax_t: f64,
    /// Denominator floor used for the relative deviations.
    pub rel_floor: f64,
    /// Relative con1/conn1 imbalance of the calibration used.
    #[serde(with = "crate::serde_float")]
    pub condition_residual: f64,
    pub failed_points: usize,
}

impl IdentityReport {
    pub fn abs_devs(&self) -> impl Iterator<Item = f64> + '_ {
        self.lhs.iter().zip(&self.rhs).map(|(a, b)| (a - b).abs())
    }

    pub fn rel_devs(&self) -> impl Iterator<Item = f64> + '_ {
        self.lhs.iter().zip(&self.rhs).map(|(&a, &b)| relative_deviation(a, b, self.rel_floor))
    }
}

/// Quadrature `G(t)` and the G-from-F expression at one time; failures map to NaN.
fn identity_point(model: &dyn GrowthModel, cal: &Calibration, t: f64, tol: &Tolerance) -> (f64, f64) {
    let lhs = model.g_of_t(cal, t, tol).unwrap_or(f64::NAN);
    let rhs = model.g_from_f(cal, t, tol).unwrap_or(f64::NAN);
    (lhs, rhs)
}

/// Evaluate both sides of the G identity along `grid`. Always produces a
/// report; points that fail are stored as NaN and counted.
pub fn check_identity(model: &dyn GrowthModel, cal: &Calibration, grid: &TimeGrid, tol: &Tolerance) -> IdentityReport {
    let (lhs, rhs): (Vec<f64>, Vec<f64>) = grid
        .points()
        .par_iter()
        .map(|&t| identity_point(model, cal, t, tol))
        .collect::<Vec<_>>()
        .into_iter()
        .unzip();
    let rel_floor = identity_floor(&lhs, tol);
    let stats = DeviationStats::over_floored(grid.points(), &lhs, &rhs, rel_floor);
    IdentityReport {
        model_tag: model.tag(),
        grid: grid.clone(),
        lhs,
        rhs,
        max_abs_dev: stats.max_abs_dev,
        max_rel_dev: stats.max_rel_dev,
        argmax_t: stats.argmax_t,
        rel_floor,
        condition_residual: model.condition_residual(cal),
        failed_points: stats.failed_points,
    }
}

/// `(h, u)` from family A against family B under one calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyComparison {
    pub model_tag: ModelTag,
    pub grid: TimeGrid,
    pub h_a: Vec<f64>,
    pub h_b: Vec<f64>,
    pub u_a: Vec<f64>,
    pub u_b: Vec<f64>,
    pub h: DeviationStats,
    pub u: DeviationStats,
    /// The G-identity deviation on the same grid.
    pub identity: DeviationStats,
    /// `h.max_rel_dev / identity.max_abs_dev`: how strongly a G mismatch
    /// shows up in `h`. `None` when the identity deviation is exactly zero.
    pub amplification: Option<f64>,
    #[serde(with = "crate::serde_float")]
    pub condition_residual: f64,
}

pub fn compare_families(
    model: &dyn GrowthModel,
    cal: &Calibration,
    grid: &TimeGrid,
    tol: &Tolerance,
) -> FamilyComparison {
    let rows: Vec<[f64; 6]> = grid
        .points()
        .par_iter()
        .map(|&t| {
            let a = model.eval(Family::A, cal, t, tol);
            let b = model.eval(Family::B, cal, t, tol);
            let (g_quad, g_rebuilt) = identity_point(model, cal, t, tol);
            let pick = |p: &Result<crate::TrajectoryPoint, _>, h: bool| match p {
                Ok(p) if h => p.h,
                Ok(p) => p.u,
                Err(_) => f64::NAN,
            };
            [pick(&a, true), pick(&b, true), pick(&a, false), pick(&b, false), g_quad, g_rebuilt]
        })
        .collect();
    let column = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    let (h_a, h_b, u_a, u_b) = (column(0), column(1), column(2), column(3));
    let (g_quad, g_rebuilt) = (column(4), column(5));

    let times = grid.points();
    let h = DeviationStats::over(times, &h_a, &h_b);
    let u = DeviationStats::over(times, &u_a, &u_b);
    let identity = DeviationStats::over_floored(times, &g_quad, &g_rebuilt, identity_floor(&g_quad, tol));
    let amplification = (identity.max_abs_dev > 0.0).then(|| h.max_rel_dev / identity.max_abs_dev);

    FamilyComparison {
        model_tag: model.tag(),
        grid: grid.clone(),
        h_a,
        h_b,
        u_a,
        u_b,
        h,
        u,
        identity,
        amplification,
        condition_residual: model.condition_residual(cal),
    }
}
