//! Closed-form trajectories of the Lucas-Uzawa growth model (CRRA and
//! logarithmic utility), the integral identities that decide whether their
//! two solution families coincide, and independent numerical oracles.

// `!(x > 0.0)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crra_model;
pub mod equivalence;
pub mod log_model;
pub mod model;
pub mod numerics;
pub mod params;
mod serde_float;
pub mod sweep;
pub mod verify;

pub use crra_model::{CrraDerived, CrraModel, CrraParams};
pub use log_model::{LogDerived, LogModel, LogParams};
pub use model::{Calibration, CalibrationMode, Family, GrowthModel, ModelError, ModelTag, TrajectoryPoint};
pub use numerics::{TimeGrid, Tolerance};
pub use params::{AnyModel, ModelParams};
