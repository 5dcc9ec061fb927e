//! Types and behaviour shared by the CRRA and logarithmic-utility models.
//!
//! Both models reduce to the same skeleton: a ratio `z = u h / k` that relaxes
//! toward a steady state `z*` along a Bernoulli-type path, and two auxiliary
//! integrals `F(t)`, `G(t)` of a power of `z` against decaying exponentials.
//! [`AuxIntegrals`] holds that skeleton and [`GrowthModel`] is the interface
//! the verification, identity and sweep modules are written against.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{integrate_finite, integrate_tail, NumericsError, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("invalid initial values: {0}")]
    InvalidInitialValues(String),
    #[error("domain error: {what} = {value}")]
    DomainError { what: &'static str, value: f64 },
    #[error("calibration infeasible: c0 = {c0} is not positive")]
    NonPositiveC0 { c0: f64 },
    #[error("con1 violated (relative residual {residual:e})")]
    Con1Violated { residual: f64 },
    #[error("conn1 violated (relative residual {residual:e})")]
    Conn1Violated { residual: f64 },
    #[error("u(t) denominator vanished at t = {t}")]
    DenominatorVanished { t: f64 },
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("calibration mode {mode} does not apply to the {model} model")]
    UnsupportedCalibration { mode: CalibrationMode, model: ModelTag },
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// `base^exp` for a base that must be strictly positive and finite.
pub(crate) fn pos_pow(base: f64, exp: f64, what: &'static str) -> Result<f64> {
    if base > 0.0 && base.is_finite() {
        Ok(base.powf(exp))
    } else {
        Err(ModelError::DomainError { what, value: base })
    }
}

pub(crate) fn finite(value: f64, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ModelError::DomainError { what, value })
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Crra,
    Log,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Crra => "crra",
            ModelTag::Log => "log",
        })
    }
}

/// Which closed-form family to evaluate.
///
/// `A` is the family built from two first integrals (CRRA) or the first
/// printed set (log); `B` is the one-first-integral family that carries `G(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::A => "A",
            Family::B => "B",
        })
    }
}

/// How `c0` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    /// CRRA algebraic condition between the two families.
    Con1,
    /// Logarithmic-utility counterpart of `Con1`.
    Conn1,
    /// `lim F(t) = F*`.
    Transversality,
    /// Supplied by the caller.
    Explicit,
}

impl fmt::Display for CalibrationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CalibrationMode::Con1 => "con1",
            CalibrationMode::Conn1 => "conn1",
            CalibrationMode::Transversality => "transversality",
            CalibrationMode::Explicit => "explicit",
        })
    }
}

/// Initial constants of a closed-form trajectory.
///
/// `z0` is always `u0 * h0 / k0` unless the calibration was deliberately
/// corrupted; `c1` is the costate constant `μ(0)`; `f_star` is `F*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub mode: CalibrationMode,
    pub k0: f64,
    pub h0: f64,
    pub u0: f64,
    pub c0: f64,
    pub z0: f64,
    pub c1: f64,
    pub f_star: f64,
}

pub(crate) fn check_initial_values(k0: f64, h0: f64, u0: f64) -> Result<()> {
    let ok = k0.is_finite() && h0.is_finite() && k0 > 0.0 && h0 > 0.0 && u0 > 0.0 && u0 <= 1.0;
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidInitialValues(format!(
            "need k0 > 0, h0 > 0, 0 < u0 <= 1 (got k0={k0}, h0={h0}, u0={u0})"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub c: f64,
    pub k: f64,
    pub h: f64,
    pub u: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// The `z` path and the two auxiliary integrals
/// `F(t) = ∫ z^p e^{-f_decay s} ds` and `G(t) = ∫ z^p e^{-g_decay s} ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxIntegrals {
    pub beta: f64,
    pub z_star: f64,
    pub relax_rate: f64,
    pub power: f64,
    pub f_decay: f64,
    pub g_decay: f64,
}

impl AuxIntegrals {
    /// Closed-form `z(t)`:
    /// `z* z0 / [(z*^{1-β} - z0^{1-β}) e^{-r t} + z0^{1-β}]^{1/(1-β)}`.
    pub fn z_path(&self, z0: f64, t: f64) -> Result<f64> {
        let one_m_beta = 1.0 - self.beta;
        let zs_pow = pos_pow(self.z_star, one_m_beta, "z*")?;
        let z0_pow = pos_pow(z0, one_m_beta, "z0")?;
        let bracket = (zs_pow - z0_pow) * (-self.relax_rate * t).exp() + z0_pow;
        let denom = pos_pow(bracket, 1.0 / one_m_beta, "z-path bracket")?;
        finite(self.z_star * z0 / denom, "z(t)")
    }

    fn integrand(&self, z0: f64, decay: f64) -> impl Fn(f64) -> f64 + '_ {
        move |s| match self.z_path(z0, s) {
            Ok(z) => z.powf(self.power) * (-decay * s).exp(),
            Err(_) => f64::NAN,
        }
    }

    pub fn f_integrand(&self, z0: f64, s: f64) -> f64 {
        self.integrand(z0, self.f_decay)(s)
    }

    pub fn g_integrand(&self, z0: f64, s: f64) -> f64 {
        self.integrand(z0, self.g_decay)(s)
    }

    /// Bound on `z(s)^p` along the monotone path from `z0` to `z*`.
    pub fn envelope(&self, z0: f64) -> f64 {
        z0.powf(self.power).max(self.z_star.powf(self.power))
    }

    fn check_time(t: f64) -> Result<()> {
        if t >= 0.0 && t.is_finite() {
            Ok(())
        } else {
            Err(ModelError::DomainError { what: "t", value: t })
        }
    }

    pub fn f_of_t(&self, z0: f64, t: f64, tol: &Tolerance) -> Result<f64> {
        Self::check_time(t)?;
        Ok(integrate_finite(self.integrand(z0, self.f_decay), 0.0, t, tol)?)
    }

    pub fn g_of_t(&self, z0: f64, t: f64, tol: &Tolerance) -> Result<f64> {
        Self::check_time(t)?;
        Ok(integrate_finite(self.integrand(z0, self.g_decay), 0.0, t, tol)?)
    }

    pub fn f_infinity(&self, z0: f64, tol: &Tolerance) -> Result<f64> {
        pos_pow(z0, 1.0, "z0")?;
        let coeff = self.envelope(z0);
        Ok(integrate_tail(self.integrand(z0, self.f_decay), 0.0, self.f_decay, coeff, tol)?)
    }

    pub fn g_infinity(&self, z0: f64, tol: &Tolerance) -> Result<f64> {
        pos_pow(z0, 1.0, "z0")?;
        let coeff = self.envelope(z0);
        Ok(integrate_tail(self.integrand(z0, self.g_decay), 0.0, self.g_decay, coeff, tol)?)
    }
}

/// A model with two closed-form families, their calibrations and the
/// G-from-F expression obtained by equating the families.
pub trait GrowthModel: Sync {
    fn tag(&self) -> ModelTag;

    fn aux(&self) -> &AuxIntegrals;

    fn rho(&self) -> f64;

    fn delta(&self) -> f64;

    /// Labour share on the balanced growth path.
    fn balanced_growth_u(&self) -> f64;

    /// The algebraic condition under which family A is valid.
    fn condition_mode(&self) -> CalibrationMode;

    /// Relative imbalance of the con1/conn1 condition for `cal`.
    fn condition_residual(&self, cal: &Calibration) -> f64;

    /// `c0` balancing the algebraic condition.
    fn c0_from_condition(&self, k0: f64, h0: f64, u0: f64) -> Result<f64>;

    /// `c0` from the transversality limit `lim F = F*`.
    fn c0_from_transversality(&self, k0: f64, h0: f64, u0: f64, tol: &Tolerance) -> Result<f64>;

    /// Fill in `z0`, `c1` and `F*` for given initial values and `c0`.
    fn assemble(&self, mode: CalibrationMode, k0: f64, h0: f64, u0: f64, z0: f64, c0: f64) -> Result<Calibration>;

    /// `(c, λ, μ)` at `t`; they depend only on the `z` path.
    fn prices(&self, cal: &Calibration, t: f64) -> Result<(f64, f64, f64)>;

    fn eval(&self, family: Family, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<TrajectoryPoint>;

    /// The right-hand side of the G-from-F expression.
    fn g_from_f(&self, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<f64>;

    /// Marginal utility `u'(c)`, which the FOC sets equal to `λ`.
    fn marginal_utility(&self, c: f64) -> f64;

    /// `(k', h')` of the state equations for controls `c`, `u`.
    fn state_derivative(&self, k: f64, h: f64, c: f64, u: f64) -> (f64, f64);

    /// `lim G / lim F` implied by the limit conditions of family B.
    fn g_limit_ratio(&self, u0: f64) -> f64 {
        let r = self.aux().relax_rate;
        let du = self.delta() * u0;
        (r + du) / du
    }

    fn z_path(&self, z0: f64, t: f64) -> Result<f64> {
        self.aux().z_path(z0, t)
    }

    fn f_of_t(&self, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<f64> {
        self.aux().f_of_t(cal.z0, t, tol)
    }

    fn g_of_t(&self, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<f64> {
        self.aux().g_of_t(cal.z0, t, tol)
    }

    fn f_infinity(&self, cal: &Calibration, tol: &Tolerance) -> Result<f64> {
        self.aux().f_infinity(cal.z0, tol)
    }

    /// Calibrate with `z0 = u0 h0 / k0`. `Explicit` is not accepted here; use
    /// [`GrowthModel::assemble`] with a caller-chosen `c0`.
    fn calibrate(&self, mode: CalibrationMode, k0: f64, h0: f64, u0: f64, tol: &Tolerance) -> Result<Calibration> {
        check_initial_values(k0, h0, u0)?;
        self.calibrate_at(mode, k0, h0, u0, u0 * h0 / k0, tol)
    }

    /// Calibrate with an arbitrary `z0`. Only negative controls should pass a
    /// `z0` other than `u0 h0 / k0`.
    fn calibrate_at(
        &self,
        mode: CalibrationMode,
        k0: f64,
        h0: f64,
        u0: f64,
        z0: f64,
        tol: &Tolerance,
    ) -> Result<Calibration> {
        check_initial_values(k0, h0, u0)?;
        let c0 = match mode {
            CalibrationMode::Transversality => {
                let f_inf = self.aux().f_infinity(z0, tol)?;
                k0 * pos_pow(z0, self.aux().power, "z0")? / f_inf
            }
            m if m == self.condition_mode() => {
                // The condition is written in terms of z0; evaluate it at the supplied one.
                let h_eff = z0 * k0 / u0;
                self.c0_from_condition(k0, h_eff, u0)?
            }
            _ => {
                return Err(ModelError::UnsupportedCalibration {
                    mode,
                    model: self.tag(),
                })
            }
        };
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(ModelError::NonPositiveC0 { c0 });
        }
        self.assemble(mode, k0, h0, u0, z0, c0)
    }

    /// Initial values on the balanced growth path: `z0 = z*`, `u0` at its
    /// steady-state value and `h0 = z* k0 / u0`.
    fn balanced_growth(&self, mode: CalibrationMode, k0: f64, tol: &Tolerance) -> Result<Calibration> {
        let u0 = self.balanced_growth_u();
        let h0 = self.aux().z_star * k0 / u0;
        self.calibrate(mode, k0, h0, u0, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn aux() -> AuxIntegrals {
        AuxIntegrals {
            beta: 0.35,
            z_star: 0.8,
            relax_rate: 0.13,
            power: 0.825,
            f_decay: 0.17,
            g_decay: 0.04,
        }
    }

    #[test]
    fn z_path_endpoints() {
        let a = aux();
        assert!((a.z_path(1.7, 0.0).unwrap() - 1.7).abs() < 1e-15);
        for t in [0.0, 3.0, 100.0] {
            assert!((a.z_path(a.z_star, t).unwrap() - a.z_star).abs() < 1e-15);
        }
        assert!(a.z_path(-1.0, 1.0).is_err());
    }

    #[test]
    fn pos_pow_guards_base() {
        assert!(pos_pow(0.0, 0.5, "x").is_err());
        assert!(pos_pow(f64::INFINITY, 0.5, "x").is_err());
        assert_eq!(pos_pow(4.0, 0.5, "x").unwrap(), 2.0);
    }

    #[test]
    fn relative_gap_handles_zero() {
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
        assert_eq!(relative_gap(1.0, 0.5), 0.5);
    }

    proptest! {
        // z^{β-1} - z*^{β-1} = (z0^{β-1} - z*^{β-1}) e^{-r t}
        #[test]
        fn z_relaxation_law(z0 in 0.05f64..20.0, t in 0.0f64..200.0) {
            let a = aux();
            let z = a.z_path(z0, t).unwrap();
            let e = a.beta - 1.0;
            let lhs = z.powf(e) - a.z_star.powf(e);
            let rhs = (z0.powf(e) - a.z_star.powf(e)) * (-a.relax_rate * t).exp();
            let scale = z.powf(e).max(a.z_star.powf(e));
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
            // monotone between z0 and z*
            prop_assert!(z >= z0.min(a.z_star) * (1.0 - 1e-14) && z <= z0.max(a.z_star) * (1.0 + 1e-14));
        }
    }
}
