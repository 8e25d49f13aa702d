//! Approximation of a displacement field whose jump set is small by a field
//! that is smooth away from a thin crown, together with quantitative checks
//! of the estimates the construction is meant to satisfy.
//!
//! The pipeline selects a crown `Q^{i₀} \ Q^{i₀+1}`, covers `Q^{i₀}` by dyadic
//! cubes refined towards `∂Q^{i₀}`, fits a rigid motion with an exceptional
//! set on every good cube, mollifies the patched field per cube and blends
//! the pieces with a partition of unity. Outside `Q^{i₀}` and on the bad set
//! the field is left untouched.

pub mod instances;
mod pipeline;
mod trace;
mod verify;

use thiserror::Error;

pub use pipeline::{approximate, default_eta, ApproxConfig, ApproxResult, CubeSummary};
pub use trace::{boundary_trace_check, TraceConfig, TracePoint, TraceReport};
pub use verify::{
    decay_sweep, psi_ramp, verify_properties, PropertyCheck, PropertyLimits, PropertyReport, VerifyConfig,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApproxError {
    #[error("jump too large for approximation regime: δ = {delta}, H^(n-1)(J) = {jump}, η = {eta}")]
    Regime { delta: f64, jump: f64, eta: f64 },
    #[error("invalid approximation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Covering(#[from] covering::CoveringError),
    #[error(transparent)]
    Korn(#[from] kornfit::KornError),
    #[error(transparent)]
    Field(#[from] field_core::FieldError),
}
