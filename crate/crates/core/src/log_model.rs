//! Lucas-Uzawa model with logarithmic utility.
//!
//! State equations: `k' = A k^β (u h)^{1-β} - c`, `h' = δ (1 - u) h`.
//! The model statement writes the capital elasticity as α while every
//! solution formula uses β; here it is `beta` throughout.

use serde::{Deserialize, Serialize};

use crate::crra_model::{require, Violation};
use crate::model::{
    check_initial_values, finite, pos_pow, relative_gap, AuxIntegrals, Calibration, CalibrationMode, Family,
    GrowthModel, ModelError, ModelTag, Result, TrajectoryPoint,
};
use crate::numerics::Tolerance;

/// Relative conn1 imbalance tolerated by family A.
pub const CONN1_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogParams {
    pub rho: f64,
    pub beta: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub delta: f64,
}

impl LogParams {
    /// Names of every inequality checked by [`LogParams::validate`], in order.
    pub const CONSTRAINTS: [&'static str; 6] = [
        "finite",
        "rho > 0",
        "0 < beta < 1",
        "A > 0",
        "delta > 0",
        "rho + delta/beta - delta > 0",
    ];

    /// `z* = (βA/δ)^{1/(β-1)}`, NaN outside its domain.
    pub fn z_star(&self) -> f64 {
        (self.beta * self.a / self.delta).powf(1.0 / (self.beta - 1.0))
    }

    /// `ρ + δ/β - δ`, the decay rate of the F-integrand.
    pub fn eta(&self) -> f64 {
        self.rho + self.delta / self.beta - self.delta
    }

    pub fn validate(&self) -> Vec<Violation> {
        let LogParams { rho, beta, a, delta } = *self;
        let mut v = Vec::new();
        let all_finite = [rho, beta, a, delta].iter().all(|x| x.is_finite());
        require(&mut v, all_finite, "finite", "all parameters must be finite".into());
        if !all_finite {
            return v;
        }
        require(&mut v, rho > 0.0, "rho > 0", format!("rho = {rho}"));
        require(&mut v, beta > 0.0 && beta < 1.0, "0 < beta < 1", format!("beta = {beta}"));
        require(&mut v, a > 0.0, "A > 0", format!("A = {a}"));
        require(&mut v, delta > 0.0, "delta > 0", format!("delta = {delta}"));
        if beta > 0.0 {
            let eta = self.eta();
            require(&mut v, eta > 0.0, "rho + delta/beta - delta > 0", format!("eta = {eta}"));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDerived {
    pub z_star: f64,
    /// `(1-β)δ/β`.
    pub relax_rate: f64,
    pub eta_log: f64,
}

impl LogDerived {
    pub fn new(p: &LogParams) -> Result<Self> {
        let z_star = pos_pow(p.beta * p.a / p.delta, 1.0 / (p.beta - 1.0), "beta*A/delta")?;
        Ok(Self {
            z_star,
            relax_rate: (1.0 - p.beta) * p.delta / p.beta,
            eta_log: p.eta(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogModel {
    pub params: LogParams,
    pub derived: LogDerived,
    aux: AuxIntegrals,
}

impl LogModel {
    pub fn new(params: LogParams) -> Result<Self> {
        let violations = params.validate();
        if !violations.is_empty() {
            return Err(ModelError::InvalidParams(
                violations.into_iter().map(|v| v.constraint.to_string()).collect(),
            ));
        }
        let derived = LogDerived::new(&params)?;
        let aux = AuxIntegrals {
            beta: params.beta,
            z_star: derived.z_star,
            relax_rate: derived.relax_rate,
            power: 1.0 - params.beta,
            f_decay: derived.eta_log,
            g_decay: params.rho,
        };
        Ok(Self { params, derived, aux })
    }

    /// Both sides of conn1: `δ u0 z0^β / (A(1-β) k0 z0)` and `ρ / (c0 - ρ k0)`.
    pub fn conn1_sides(&self, cal: &Calibration) -> (f64, f64) {
        let LogParams { rho, beta, a, delta } = self.params;
        let lhs = delta * cal.u0 * cal.z0.powf(beta) / (a * (1.0 - beta) * cal.k0 * cal.z0);
        let rhs = rho / (cal.c0 - rho * cal.k0);
        (lhs, rhs)
    }

    /// `c0 = ρ k0 + ρ A (1-β) k0 z0^{1-β} / (δ u0)`; always above `ρ k0`.
    pub fn c0_from_conn1(&self, k0: f64, h0: f64, u0: f64) -> Result<f64> {
        check_initial_values(k0, h0, u0)?;
        let LogParams { rho, beta, a, delta } = self.params;
        let z0 = u0 * h0 / k0;
        Ok(rho * k0 + rho * a * (1.0 - beta) * k0 * pos_pow(z0, 1.0 - beta, "z0")? / (delta * u0))
    }

    pub fn c0_log_transversality(&self, k0: f64, h0: f64, u0: f64, tol: &Tolerance) -> Result<f64> {
        self.c0_from_transversality(k0, h0, u0, tol)
    }

    fn check_conn1(&self, cal: &Calibration) -> Result<()> {
        let residual = self.condition_residual(cal);
        if residual <= CONN1_TOLERANCE {
            Ok(())
        } else {
            Err(ModelError::Conn1Violated { residual })
        }
    }

    /// Family A (first printed set). Requires conn1.
    pub fn eval_family_a(&self, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<TrajectoryPoint> {
        self.check_conn1(cal)?;
        let LogParams { rho, beta, delta, .. } = self.params;
        let Calibration { k0, h0, u0, c0, z0, f_star, .. } = *cal;

        let (c, lambda, mu) = self.prices(cal, t)?;
        let z = self.aux.z_path(z0, t)?;
        let f = self.aux.f_of_t(z0, t, tol)?;
        let remaining = f_star - f;

        let k = c0 * pos_pow(z0, beta, "z0")? / z * (delta / beta * t).exp() * remaining;
        let h = rho * c0 * h0 / (c0 - rho * k0)
            * ((-(rho - delta) * t).exp() / rho - z.powf(beta - 1.0) * (delta / beta * t).exp() * remaining);
        let u_den = k0 * ((((delta - rho) - delta / beta) * t).exp() - rho * z.powf(beta - 1.0) * remaining);
        if !(u_den > 0.0) {
            return Err(ModelError::DenominatorVanished { t });
        }
        let u = u0 * z0.powf(beta - 1.0) * (c0 - rho * k0) * remaining / u_den;

        Ok(TrajectoryPoint {
            t,
            c,
            k: finite(k, "k(t)")?,
            h: finite(h, "h(t)")?,
            u: finite(u, "u(t)")?,
            lambda,
            mu,
        })
    }

    /// Family B (second printed set), using `F(t)` and `G(t)`.
    pub fn eval_family_b(&self, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<TrajectoryPoint> {
        let LogParams { beta, delta, .. } = self.params;
        let Calibration { k0, h0, u0, c0, z0, f_star, .. } = *cal;
        let r = delta / beta - delta;

        let (c, lambda, mu) = self.prices(cal, t)?;
        let z = self.aux.z_path(z0, t)?;
        let f = self.aux.f_of_t(z0, t, tol)?;
        let g = self.aux.g_of_t(z0, t, tol)?;
        let remaining = f_star - f;

        let k = c0 * pos_pow(z0, beta, "z0")? / z * (delta / beta * t).exp() * remaining;
        let bracket = ((r + delta * u0) * f_star - delta * u0 * g) * ((delta - delta / beta) * t).exp()
            - delta * u0 * remaining;
        if !(bracket > 0.0) {
            return Err(ModelError::DenominatorVanished { t });
        }
        let h = bracket * h0 * c0 / (k0 * z0.powf(1.0 - beta) * r) * (delta / beta * t).exp();
        let u = r * u0 * remaining / bracket;

        Ok(TrajectoryPoint {
            t,
            c,
            k: finite(k, "k(t)")?,
            h: finite(h, "h(t)")?,
            u: finite(u, "u(t)")?,
            lambda,
            mu,
        })
    }
}

impl GrowthModel for LogModel {
    fn tag(&self) -> ModelTag {
        ModelTag::Log
    }

    fn aux(&self) -> &AuxIntegrals {
        &self.aux
    }

    fn rho(&self) -> f64 {
        self.params.rho
    }

    fn delta(&self) -> f64 {
        self.params.delta
    }

    fn balanced_growth_u(&self) -> f64 {
        self.params.rho / self.params.delta
    }

    fn condition_mode(&self) -> CalibrationMode {
        CalibrationMode::Conn1
    }

    fn condition_residual(&self, cal: &Calibration) -> f64 {
        let (lhs, rhs) = self.conn1_sides(cal);
        if rhs.is_finite() && rhs > 0.0 {
            relative_gap(lhs, rhs)
        } else {
            f64::INFINITY
        }
    }

    fn c0_from_condition(&self, k0: f64, h0: f64, u0: f64) -> Result<f64> {
        self.c0_from_conn1(k0, h0, u0)
    }

    /// `c0 = k0 z0^{1-β} / F(∞)`.
    fn c0_from_transversality(&self, k0: f64, h0: f64, u0: f64, tol: &Tolerance) -> Result<f64> {
        Ok(self.calibrate(CalibrationMode::Transversality, k0, h0, u0, tol)?.c0)
    }

    fn assemble(&self, mode: CalibrationMode, k0: f64, h0: f64, u0: f64, z0: f64, c0: f64) -> Result<Calibration> {
        check_initial_values(k0, h0, u0)?;
        let LogParams { beta, a, delta, .. } = self.params;
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(ModelError::NonPositiveC0 { c0 });
        }
        let zb = pos_pow(z0, beta, "z0")?;
        let c1 = a * (1.0 - beta) / (delta * zb * c0);
        let f_star = k0 * z0.powf(1.0 - beta) / c0;
        Ok(Calibration { mode, k0, h0, u0, c0, z0, c1, f_star })
    }

    fn prices(&self, cal: &Calibration, t: f64) -> Result<(f64, f64, f64)> {
        let LogParams { rho, beta, a, delta } = self.params;
        let z = self.aux.z_path(cal.z0, t)?;
        let zb0 = pos_pow(cal.z0, beta, "z0")?;
        let c = cal.c0 * zb0 * ((delta - rho) * t).exp() * z.powf(-beta);
        let lambda = 1.0 / (cal.c0 * zb0) * ((rho - delta) * t).exp() * z.powf(beta);
        let mu = a * (1.0 - beta) / (delta * zb0 * cal.c0) * ((rho - delta) * t).exp();
        Ok((finite(c, "c(t)")?, finite(lambda, "lambda(t)")?, finite(mu, "mu(t)")?))
    }

    fn eval(&self, family: Family, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<TrajectoryPoint> {
        match family {
            Family::A => self.eval_family_a(cal, t, tol),
            Family::B => self.eval_family_b(cal, t, tol),
        }
    }

    fn g_from_f(&self, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<f64> {
        let LogParams { rho, beta, a, delta } = self.params;
        let r = delta / beta - delta;
        let f_star = cal.f_star;
        let z = self.aux.z_path(cal.z0, t)?;
        let f = self.aux.f_of_t(cal.z0, t, tol)?;
        let remaining = f_star - f;
        let ert = (r * t).exp();
        let inner = ((delta - rho - delta / beta) * t).exp() - rho * z.powf(beta - 1.0) * remaining;
        let g = f_star - remaining * ert + r * f_star / (delta * cal.u0) - ert * r / (a * (1.0 - beta) * rho) * inner;
        finite(g, "G from F")
    }

    fn marginal_utility(&self, c: f64) -> f64 {
        1.0 / c
    }

    fn state_derivative(&self, k: f64, h: f64, c: f64, u: f64) -> (f64, f64) {
        let LogParams { beta, a, delta, .. } = self.params;
        let k_dot = a * k.powf(beta) * (u * h).powf(1.0 - beta) - c;
        let h_dot = delta * (1.0 - u) * h;
        (k_dot, h_dot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> LogParams {
        LogParams { rho: 0.03, beta: 0.35, a: 1.0, delta: 0.05 }
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn validation() {
        assert!(params().validate().is_empty());
        let bad = LogParams { beta: 1.2, ..params() };
        assert!(bad.validate().iter().any(|v| v.constraint == "0 < beta < 1"));
        assert!(LogModel::new(LogParams { a: -1.0, ..params() }).is_err());
    }

    #[test]
    fn z_path_relaxes_at_log_rate() {
        let m = LogModel::new(params()).unwrap();
        let zs = m.derived.z_star;
        assert_relative_eq!(zs, (0.35f64 / 0.05).powf(1.0 / (0.35 - 1.0)), max_relative = 1e-14);
        let z0 = 2.0 * zs;
        assert_eq!(m.z_path(z0, 0.0).unwrap(), z0);
        let t = 13.0;
        let z = m.z_path(z0, t).unwrap();
        let e = params().beta - 1.0;
        let expected = zs.powf(e) + (z0.powf(e) - zs.powf(e)) * (-m.derived.relax_rate * t).exp();
        assert_relative_eq!(z.powf(e), expected, max_relative = 1e-12);
    }

    #[test]
    fn integrals_stationary() {
        let m = LogModel::new(params()).unwrap();
        let cal = m.balanced_growth(CalibrationMode::Conn1, 1.0, &tol()).unwrap();
        let zp = m.derived.z_star.powf(1.0 - params().beta);
        let eta = m.derived.eta_log;
        let rho = params().rho;
        assert_eq!(m.f_of_t(&cal, 0.0, &tol()).unwrap(), 0.0);
        for t in [1.0, 20.0] {
            assert_relative_eq!(
                m.f_of_t(&cal, t, &tol()).unwrap(),
                zp * (1.0 - (-eta * t).exp()) / eta,
                max_relative = 1e-11
            );
            assert_relative_eq!(
                m.g_of_t(&cal, t, &tol()).unwrap(),
                zp * (1.0 - (-rho * t).exp()) / rho,
                max_relative = 1e-11
            );
        }
        assert_relative_eq!(m.f_infinity(&cal, &tol()).unwrap(), zp / eta, max_relative = 1e-11);
        assert_relative_eq!(m.aux().g_infinity(cal.z0, &tol()).unwrap(), zp / rho, max_relative = 1e-10);
    }

    #[test]
    fn conn1_inversion() {
        let m = LogModel::new(params()).unwrap();
        let cal = m.calibrate(CalibrationMode::Conn1, 1.0, 2.0, 0.6, &tol()).unwrap();
        let (lhs, rhs) = m.conn1_sides(&cal);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        assert!(cal.c0 > params().rho * cal.k0);
    }

    #[test]
    fn conn1_c0_decreases_in_u0() {
        // Brute-force scan: c0 - ρk0 ∝ u0^{-β} for fixed (k0, h0).
        let m = LogModel::new(params()).unwrap();
        let scan: Vec<f64> = (1..=100)
            .map(|i| m.c0_from_conn1(1.0, 2.0, i as f64 / 100.0).unwrap())
            .collect();
        assert!(scan.windows(2).all(|w| w[1] < w[0]));
        assert!(scan.iter().all(|&c| c > params().rho));
    }

    #[test]
    fn stationary_transversality() {
        let m = LogModel::new(params()).unwrap();
        let zs = m.derived.z_star;
        let c0 = m.c0_log_transversality(1.0, zs / 0.4, 0.4, &tol()).unwrap();
        assert_relative_eq!(c0, m.derived.eta_log, max_relative = 1e-10);
    }

    #[test]
    fn families_start_at_initial_values() {
        let m = LogModel::new(params()).unwrap();
        let cal = m.calibrate(CalibrationMode::Conn1, 1.0, 2.0, 0.6, &tol()).unwrap();
        let mu0 = params().a * (1.0 - params().beta) / (params().delta * cal.z0.powf(params().beta) * cal.c0);
        for family in [Family::A, Family::B] {
            let p = m.eval(family, &cal, 0.0, &tol()).unwrap();
            assert_relative_eq!(p.c, cal.c0, max_relative = 1e-12);
            assert_relative_eq!(p.k, cal.k0, max_relative = 1e-12);
            assert_relative_eq!(p.h, cal.h0, max_relative = 1e-12);
            assert_relative_eq!(p.u, cal.u0, max_relative = 1e-12);
            assert_relative_eq!(p.lambda, 1.0 / cal.c0, max_relative = 1e-12);
            assert_relative_eq!(p.mu, mu0, max_relative = 1e-12);
        }
    }

    #[test]
    fn family_a_refuses_transversality() {
        let m = LogModel::new(params()).unwrap();
        let cal = m.calibrate(CalibrationMode::Transversality, 1.0, 2.0, 0.6, &tol()).unwrap();
        assert!(matches!(
            m.eval(Family::A, &cal, 2.0, &tol()),
            Err(ModelError::Conn1Violated { .. })
        ));
        assert!(matches!(
            m.calibrate(CalibrationMode::Con1, 1.0, 2.0, 0.6, &tol()),
            Err(ModelError::UnsupportedCalibration { .. })
        ));
    }

    #[test]
    fn g_from_f_zero_at_origin() {
        let m = LogModel::new(params()).unwrap();
        let cal = m.calibrate(CalibrationMode::Conn1, 1.0, 2.0, 0.6, &tol()).unwrap();
        assert!(m.g_from_f(&cal, 0.0, &tol()).unwrap().abs() < 1e-10);
    }

    #[test]
    fn foc_and_mu_growth() {
        let m = LogModel::new(params()).unwrap();
        let cal = m.calibrate(CalibrationMode::Conn1, 1.0, 2.0, 0.6, &tol()).unwrap();
        let scale = params().delta * cal.z0.powf(params().beta) * cal.c0 / (params().a * (1.0 - params().beta));
        for t in [0.0, 5.0, 50.0] {
            let (c, lambda, mu) = m.prices(&cal, t).unwrap();
            assert_relative_eq!(lambda * c, 1.0, max_relative = 1e-12);
            assert_relative_eq!(mu * scale, ((params().rho - params().delta) * t).exp(), max_relative = 1e-12);
        }
    }
}
