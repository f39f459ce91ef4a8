//! Optimal bang-off control of a symmetrically coupled two-qubit system.
//!
//! The crate covers the exact piecewise-constant dynamics ([`quantum`]), the
//! bang-off control representation ([`control`]), multi-start quasi-Newton
//! optimization of segment durations ([`optimizer`]), and the sweeps and
//! bisection searches that locate critical durations ([`experiments`]).

pub mod control;
pub mod experiments;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod quantum;
pub mod trajectory;

pub use control::{BangOffControl, ControlLevel, ControlRecord, ControlType, DurationVector};
pub use error::{Error, Result};
pub use optimizer::{ObjectiveKind, OptimizationConfig, TypeOptimum};
pub use quantum::TwoQubitState;
