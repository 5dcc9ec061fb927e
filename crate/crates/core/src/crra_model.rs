//! Lucas-Uzawa model with CRRA utility `(c^{1-σ} - 1)/(1 - σ)`.
//!
//! State equations:
//! `k' = γ k^β (u h)^{1-β} - π k - c`, `h' = δ (1 - u) h`.
//!
//! Family A is the solution obtained from two first integrals and is valid
//! only under the con1 condition; family B uses one first integral and
//! carries the auxiliary integral `G(t)`.

use serde::{Deserialize, Serialize};

use crate::model::{
    check_initial_values, finite, pos_pow, relative_gap, AuxIntegrals, Calibration, CalibrationMode, Family,
    GrowthModel, ModelError, ModelTag, Result, TrajectoryPoint,
};
use crate::numerics::Tolerance;

/// Relative con1 imbalance tolerated by family A.
pub const CON1_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrraParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub gamma: f64,
    pub pi: f64,
    pub delta: f64,
}

/// A named inequality that failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub constraint: &'static str,
    pub detail: String,
}

pub(crate) fn require(out: &mut Vec<Violation>, ok: bool, constraint: &'static str, detail: String) {
    if !ok {
        out.push(Violation { constraint, detail });
    }
}

impl CrraParams {
    /// Names of every inequality checked by [`CrraParams::validate`], in order.
    pub const CONSTRAINTS: [&'static str; 11] = [
        "finite",
        "sigma > 0",
        "sigma != 1",
        "rho > 0",
        "0 < beta < 1",
        "gamma > 0",
        "pi >= 0",
        "delta > 0",
        "rho < delta",
        "delta < rho + delta*sigma",
        "eta > 0",
    ];

    /// `ζ = (δσ - δ + ρ)/σ`, the decay rate of the G-integrand.
    pub fn zeta(&self) -> f64 {
        (self.delta * self.sigma - self.delta + self.rho) / self.sigma
    }

    /// `z* = (βγ/(δ+π))^{1/(β-1)}`, NaN outside its domain.
    pub fn z_star(&self) -> f64 {
        (self.beta * self.gamma / (self.delta + self.pi)).powf(1.0 / (self.beta - 1.0))
    }

    /// `η = (δ + π - πβ)/β - (δ - ρ)/σ`, the decay rate of the F-integrand.
    pub fn eta(&self) -> f64 {
        (self.delta + self.pi - self.pi * self.beta) / self.beta - (self.delta - self.rho) / self.sigma
    }

    /// Every violated inequality; empty iff the parameters are admissible.
    pub fn validate(&self) -> Vec<Violation> {
        let CrraParams { sigma, rho, beta, gamma, pi, delta } = *self;
        let mut v = Vec::new();
        let all_finite = [sigma, rho, beta, gamma, pi, delta].iter().all(|x| x.is_finite());
        require(&mut v, all_finite, "finite", "all parameters must be finite".into());
        if !all_finite {
            return v;
        }
        require(&mut v, sigma > 0.0, "sigma > 0", format!("sigma = {sigma}"));
        require(&mut v, sigma != 1.0, "sigma != 1", "sigma = 1 is the logarithmic model".into());
        require(&mut v, rho > 0.0, "rho > 0", format!("rho = {rho}"));
        require(&mut v, beta > 0.0 && beta < 1.0, "0 < beta < 1", format!("beta = {beta}"));
        require(&mut v, gamma > 0.0, "gamma > 0", format!("gamma = {gamma}"));
        require(&mut v, pi >= 0.0, "pi >= 0", format!("pi = {pi}"));
        require(&mut v, delta > 0.0, "delta > 0", format!("delta = {delta}"));
        require(&mut v, rho < delta, "rho < delta", format!("{rho} < {delta}"));
        require(
            &mut v,
            delta < rho + delta * sigma,
            "delta < rho + delta*sigma",
            format!("{delta} < {}", rho + delta * sigma),
        );
        if beta > 0.0 && sigma != 0.0 {
            let eta = self.eta();
            require(&mut v, eta > 0.0, "eta > 0", format!("eta = {eta}"));
        }
        v
    }

    /// The special-case restriction `σ = β(ρ+π)/(2πβ - δ + δβ - π)` with a
    /// positive denominator.
    pub fn detect_restriction(&self) -> RestrictionCheck {
        let CrraParams { sigma, rho, beta, pi, delta, .. } = *self;
        let denominator = 2.0 * pi * beta - delta + delta * beta - pi;
        let target = beta * (rho + pi) / denominator;
        let residual = sigma - target;
        RestrictionCheck {
            holds: denominator > 0.0 && residual.abs() <= 1e-10,
            residual,
            denominator,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictionCheck {
    pub holds: bool,
    /// `σ` minus the restricted value (non-finite when the denominator is 0).
    pub residual: f64,
    pub denominator: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrraDerived {
    pub z_star: f64,
    pub eta: f64,
    pub zeta: f64,
    /// `(1-β)(δ+π)/β`, the rate at which `z^{β-1}` relaxes.
    pub relax_rate: f64,
}

impl CrraDerived {
    pub fn new(p: &CrraParams) -> Result<Self> {
        let CrraParams { beta, gamma, pi, delta, .. } = *p;
        let z_star = pos_pow(beta * gamma / (delta + pi), 1.0 / (beta - 1.0), "beta*gamma/(delta+pi)")?;
        let eta = p.eta();
        let relax_rate = (delta + pi) * (1.0 - beta) / beta;
        let zeta_from_eta = eta - relax_rate;
        let zeta = p.zeta();
        if (zeta - zeta_from_eta).abs() > 1e-12 * zeta.abs().max(1.0) {
            return Err(ModelError::InternalInconsistency(format!(
                "zeta forms disagree: {zeta} vs {zeta_from_eta}"
            )));
        }
        Ok(Self { z_star, eta, zeta, relax_rate })
    }
}

/// Validated CRRA parameters together with their derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrraModel {
    pub params: CrraParams,
    pub derived: CrraDerived,
    aux: AuxIntegrals,
}

impl CrraModel {
    pub fn new(params: CrraParams) -> Result<Self> {
        let violations = params.validate();
        if !violations.is_empty() {
            return Err(ModelError::InvalidParams(
                violations.into_iter().map(|v| v.constraint.to_string()).collect(),
            ));
        }
        let derived = CrraDerived::new(&params)?;
        let aux = AuxIntegrals {
            beta: params.beta,
            z_star: derived.z_star,
            relax_rate: derived.relax_rate,
            power: (params.sigma - params.beta) / params.sigma,
            f_decay: derived.eta,
            g_decay: derived.zeta,
        };
        Ok(Self { params, derived, aux })
    }

    /// Both sides of con1:
    /// `γ(1-β)(ρ-δ+δσ)/δ` and `(u0/k0)[σ c0 z0^{β-1} - (ρ+π-πσ) k0 z0^{β-1} + βγ(1-σ) k0]`.
    pub fn con1_sides(&self, cal: &Calibration) -> (f64, f64) {
        let CrraParams { sigma, rho, beta, gamma, delta, .. } = self.params;
        let lhs = gamma * (1.0 - beta) * (rho - delta + delta * sigma) / delta;
        let rhs = cal.u0 / cal.k0 * self.bracket_d(cal);
        (lhs, rhs)
    }

    /// `σ c0 z0^{β-1} - (ρ+π-πσ) k0 z0^{β-1} + βγ(1-σ) k0`.
    fn bracket_d(&self, cal: &Calibration) -> f64 {
        let CrraParams { sigma, rho, beta, gamma, pi, .. } = self.params;
        let w = cal.z0.powf(beta - 1.0);
        sigma * cal.c0 * w - (rho + pi - pi * sigma) * cal.k0 * w + beta * gamma * (1.0 - sigma) * cal.k0
    }

    /// The unique `c0` balancing con1, with `z0 = u0 h0 / k0`.
    pub fn c0_from_con1(&self, k0: f64, h0: f64, u0: f64) -> Result<f64> {
        check_initial_values(k0, h0, u0)?;
        let CrraParams { sigma, rho, beta, gamma, pi, delta } = self.params;
        let z0 = u0 * h0 / k0;
        let w = pos_pow(z0, beta - 1.0, "z0")?;
        let numerator = k0 * gamma * (1.0 - beta) * (rho - delta + delta * sigma) / (delta * u0)
            + (rho + pi - pi * sigma) * k0 * w
            - beta * gamma * (1.0 - sigma) * k0;
        let c0 = numerator / (sigma * w);
        if c0 > 0.0 && c0.is_finite() {
            Ok(c0)
        } else {
            Err(ModelError::NonPositiveC0 { c0 })
        }
    }

    fn check_con1(&self, cal: &Calibration) -> Result<()> {
        let residual = self.condition_residual(cal);
        if residual <= CON1_TOLERANCE {
            Ok(())
        } else {
            Err(ModelError::Con1Violated { residual })
        }
    }

    /// Family A (two first integrals). Requires con1.
    pub fn eval_two_integrals(&self, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<TrajectoryPoint> {
        self.check_con1(cal)?;
        let CrraParams { sigma, rho, beta, gamma, pi, delta } = self.params;
        let Calibration { k0, h0, u0, z0, .. } = *cal;
        let eta = self.derived.eta;
        let f_star = cal.f_star;

        let (c, lambda, mu) = self.prices(cal, t)?;
        let z = self.aux.z_path(z0, t)?;
        let f = self.aux.f_of_t(z0, t, tol)?;
        let scale = cal.c0 * pos_pow(z0, beta / sigma, "z0")?;
        let growth = ((delta + pi - pi * beta) / beta * t).exp();
        let remaining = f_star - f;

        let k = remaining * scale / z * growth;

        let d = self.bracket_d(cal);
        if !(d > 0.0) {
            return Err(ModelError::DenominatorVanished { t });
        }
        let mix = beta * gamma * (1.0 - sigma) - (rho + pi - pi * sigma) * z.powf(beta - 1.0);
        let h = h0 / (z0 * d)
            * (sigma * scale * (-(rho - delta) / sigma * t).exp() * z.powf(-beta / sigma + beta)
                + mix * remaining * scale * growth);

        let u_den = mix * remaining + sigma * z.powf(beta - beta / sigma) * (-eta * t).exp();
        if !(u_den > 0.0) {
            return Err(ModelError::DenominatorVanished { t });
        }
        let u = u0 / k0 * d * remaining / u_den;

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

    /// Family B (one first integral), using both `F(t)` and `G(t)`.
    pub fn eval_one_integral(&self, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<TrajectoryPoint> {
        let CrraParams { sigma, beta, pi, delta, .. } = self.params;
        let Calibration { u0, z0, .. } = *cal;
        let r = self.derived.relax_rate;
        let f_star = cal.f_star;

        let (c, lambda, mu) = self.prices(cal, t)?;
        let z = self.aux.z_path(z0, t)?;
        let f = self.aux.f_of_t(z0, t, tol)?;
        let g = self.aux.g_of_t(z0, t, tol)?;
        let scale = cal.c0 * pos_pow(z0, beta / sigma, "z0")?;
        let growth = ((pi + delta - pi * beta) / beta * t).exp();
        let remaining = f_star - f;

        let k = remaining * scale / z * growth;

        let bracket =
            (r * f_star + delta * u0 * f_star - delta * u0 * g) * (-r * t).exp() - delta * u0 * remaining;
        if !(bracket > 0.0) {
            return Err(ModelError::DenominatorVanished { t });
        }
        let h = bracket * scale / (r * u0) * growth;
        let u = r * u0 * remaining
            / (((r + delta * u0) * f_star - delta * u0 * g) * (-r * t).exp() - delta * u0 * remaining);

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

impl GrowthModel for CrraModel {
    fn tag(&self) -> ModelTag {
        ModelTag::Crra
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

    /// `ζ/δ = 1 - (δ-ρ)/(σδ)`.
    fn balanced_growth_u(&self) -> f64 {
        self.derived.zeta / self.params.delta
    }

    fn condition_mode(&self) -> CalibrationMode {
        CalibrationMode::Con1
    }

    fn condition_residual(&self, cal: &Calibration) -> f64 {
        let (lhs, rhs) = self.con1_sides(cal);
        relative_gap(lhs, rhs)
    }

    fn c0_from_condition(&self, k0: f64, h0: f64, u0: f64) -> Result<f64> {
        self.c0_from_con1(k0, h0, u0)
    }

    /// `c0 = k0 z0^{(σ-β)/σ} / F(∞)`; `F(∞)` does not depend on `c0`.
    fn c0_from_transversality(&self, k0: f64, h0: f64, u0: f64, tol: &Tolerance) -> Result<f64> {
        Ok(self.calibrate(CalibrationMode::Transversality, k0, h0, u0, tol)?.c0)
    }

    fn assemble(&self, mode: CalibrationMode, k0: f64, h0: f64, u0: f64, z0: f64, c0: f64) -> Result<Calibration> {
        check_initial_values(k0, h0, u0)?;
        let CrraParams { sigma, beta, gamma, delta, .. } = self.params;
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(ModelError::NonPositiveC0 { c0 });
        }
        let scale = c0 * pos_pow(z0, beta / sigma, "z0")?;
        let c1 = (1.0 - beta) * gamma / delta * scale.powf(-sigma);
        let f_star = k0 / (c0 * z0.powf((beta - sigma) / sigma));
        Ok(Calibration { mode, k0, h0, u0, c0, z0, c1, f_star })
    }

    fn prices(&self, cal: &Calibration, t: f64) -> Result<(f64, f64, f64)> {
        let CrraParams { sigma, rho, beta, delta, .. } = self.params;
        let z = self.aux.z_path(cal.z0, t)?;
        let c = cal.c0 * pos_pow(cal.z0, beta / sigma, "z0")? * (-(rho - delta) / sigma * t).exp()
            * z.powf(-beta / sigma);
        let lambda = cal.c0.powf(-sigma) * cal.z0.powf(-beta) * ((rho - delta) * t).exp() * z.powf(beta);
        let mu = cal.c1 * ((rho - delta) * t).exp();
        Ok((finite(c, "c(t)")?, finite(lambda, "lambda(t)")?, finite(mu, "mu(t)")?))
    }

    fn eval(&self, family: Family, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<TrajectoryPoint> {
        match family {
            Family::A => self.eval_two_integrals(cal, t, tol),
            Family::B => self.eval_one_integral(cal, t, tol),
        }
    }

    fn g_from_f(&self, cal: &Calibration, t: f64, tol: &Tolerance) -> Result<f64> {
        let CrraParams { sigma, rho, beta, gamma, pi, delta } = self.params;
        let r = self.derived.relax_rate;
        let eta = (delta + pi * (1.0 - beta)) / beta - (delta - rho) / sigma;
        let f_star = cal.f_star;
        let z = self.aux.z_path(cal.z0, t)?;
        let f = self.aux.f_of_t(cal.z0, t, tol)?;
        let remaining = f_star - f;

        let denom = gamma * (1.0 - beta) * (rho - delta * (1.0 - sigma));
        if !(denom > 0.0) {
            return Err(ModelError::DomainError { what: "gamma(1-beta)(rho-delta(1-sigma))", value: denom });
        }
        let ert = (r * t).exp();
        let inner = sigma * z.powf(beta - beta / sigma) * (-eta * t).exp()
            + (gamma * beta * (1.0 - sigma) - (rho + pi - pi * sigma) * z.powf(beta - 1.0)) * remaining;
        let g = f_star - remaining * ert + r * f_star / (delta * cal.u0) - ert * r / denom * inner;
        finite(g, "G from F")
    }

    fn marginal_utility(&self, c: f64) -> f64 {
        c.powf(-self.params.sigma)
    }

    fn state_derivative(&self, k: f64, h: f64, c: f64, u: f64) -> (f64, f64) {
        let CrraParams { beta, gamma, pi, delta, .. } = self.params;
        let k_dot = gamma * k.powf(beta) * u.powf(1.0 - beta) * h.powf(1.0 - beta) - pi * k - c;
        let h_dot = delta * (1.0 - u) * h;
        (k_dot, h_dot)
    }
}
