//! Discrete displacement fields with crack sets on a uniform grid of `Q_r`.
//!
//! Values live at cell centres so that a cracked face can separate two
//! independent values. Strains use central differences that fall back to
//! one-sided differences at cracked faces and at the domain boundary.

pub mod energy;
pub mod field;
pub mod grid;
pub mod io;
pub mod mollifier;
pub mod synth;

use thiserror::Error;

pub use energy::{energy_g, energy_g0, energy_with_strain, f_0, f_mu, EnergyBreakdown, EnergyParams, HookeTensor};
pub use field::{
    derivative_stencil, gradient_at, strain_of_values, symmetric_gradient, symmetrize, DisplacementField, JumpSet,
    Stencil, StrainField,
};
pub use grid::{frobenius, norm3, sub3, AaBox, Face, GridSpec, Mat3, Region, Vec3};
pub use mollifier::{mollify, Blendable, Kernel, Mollified, Mollifier};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("array extent {got} does not match grid ({expected})")]
    ExtentMismatch { expected: usize, got: usize },
    #[error("non-finite value in field")]
    NonFinite,
    #[error("face (axis {axis}, cell {cell}) is not interior")]
    NotInterior { axis: usize, cell: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("kernel under-resolved: scale {scale} < h = {h}")]
    UnderResolved { scale: f64, h: f64 },
    #[error("i/o: {0}")]
    Io(String),
}
