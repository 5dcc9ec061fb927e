//! Deterministic quadrature and ODE primitives.
//!
//! Everything here is pure: the same inputs always produce bit-identical
//! outputs, and no routine keeps state between calls.

mod ode;
mod quadrature;

pub use ode::integrate_ode;
pub use quadrature::{integrate_finite, integrate_tail};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("quadrature did not converge: error estimate {estimate:e} after {subdivisions} subdivisions")]
    NonConvergence { estimate: f64, subdivisions: usize },
    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error("invalid exponential envelope (rate {decay_rate}, coefficient {bound_coeff})")]
    InvalidEnvelope { decay_rate: f64, bound_coeff: f64 },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("step limit of {max_steps} exceeded at t = {t}")]
    StepLimitExceeded { t: f64, max_steps: usize },
}

/// Error control shared by the quadrature and ODE routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self, NumericsError> {
        let tol = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.abs_tol.is_finite() && self.rel_tol.is_finite()) {
            return Err(NumericsError::InvalidTolerance("tolerances must be finite".into()));
        }
        if self.abs_tol < 0.0 || self.rel_tol < 0.0 {
            return Err(NumericsError::InvalidTolerance("tolerances must be non-negative".into()));
        }
        if self.abs_tol + self.rel_tol <= 0.0 {
            return Err(NumericsError::InvalidTolerance("abs_tol + rel_tol must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(NumericsError::InvalidTolerance("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }

    /// Same subdivision budget, both tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            max_subdivisions: self.max_subdivisions,
        }
    }

    /// The error allowed for a result of magnitude `value`.
    pub fn allowance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
        }
    }
}

/// Strictly increasing sample times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, NumericsError> {
        if points.is_empty() {
            return Err(NumericsError::InvalidGrid("grid has no points".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(NumericsError::InvalidGrid("grid contains non-finite times".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NumericsError::InvalidGrid("grid points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `n` equally spaced points from `t_start` to `t_end` inclusive.
    pub fn uniform(t_start: f64, t_end: f64, n: usize) -> Result<Self, NumericsError> {
        match n {
            0 => Err(NumericsError::InvalidGrid("grid has no points".into())),
            1 if t_start == t_end => Self::new(vec![t_start]),
            1 => Err(NumericsError::InvalidGrid(
                "a single-point grid needs t_start == t_end".into(),
            )),
            _ => {
                let step = (t_end - t_start) / (n - 1) as f64;
                let mut points: Vec<f64> = (0..n).map(|i| t_start + step * i as f64).collect();
                points[n - 1] = t_end;
                Self::new(points)
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn t_start(&self) -> f64 {
        self.points[0]
    }

    pub fn t_end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = NumericsError;

    fn try_from(points: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(points)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(grid: TimeGrid) -> Self {
        grid.points
    }
}
