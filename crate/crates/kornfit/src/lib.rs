//! Korn–Poincaré machinery on a single cube: least-squares rigid motions,
//! trimming of an exceptional set where the field does not follow the
//! motion, the mollification error of the patched field, and the affine
//! subset inequalities used to compare neighbouring fits.

mod linalg;
pub mod mollified;
pub mod motion;
pub mod subset;
pub mod trim;

use thiserror::Error;

pub use mollified::{decay_exponent, mollified_strain_error, patched_mollification, MollifiedError};
pub use motion::{fit_rigid_motion, lp_residual, rigid_dof, AffineMap, RigidMotion};
pub use subset::{affine_subset_bound, shrunk_cells, neighbor_affine_distance, overlap_region, SubsetBound};
pub use trim::{
    extract_exceptional_set, jump_measure_in, prefix_oracle, ExceptionalSet, FitConfig, FitConstants, FitReport, PrefixOracle,
    DEFAULT_C_STAR, SOBOLEV_LIMIT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KornError {
    #[error("rank-deficient fit on {cells} cells")]
    RankDeficient { cells: usize },
    #[error("empty overlap region")]
    EmptyOverlap,
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Field(#[from] field_core::FieldError),
}

/// Sobolev exponent `np/(n−1)`.
pub fn sobolev_exponent(dim: usize, p: f64) -> f64 {
    dim as f64 * p / (dim as f64 - 1.0)
}
