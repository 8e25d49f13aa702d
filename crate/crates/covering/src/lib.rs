//! Combinatorial skeleton of the small-jump approximation: crown selection,
//! a dyadic Whitney-type covering of `Q^{i₀}`, the good/bad classification
//! of its cubes and a smooth partition of unity on the good part.

pub mod crown;
pub mod cube;
pub mod partition;
pub mod structure;
pub mod whitney;

use thiserror::Error;

pub use crown::{align_delta, choose_index, select_crown, CrownCandidate, CrownSelection, CrownTotals};
pub use cube::{DyadicCube, Enlargement};
pub use partition::{partition_of_unity, PartitionOfUnity, PartitionReport};
pub use structure::{check_structure, StructureReport};
pub use whitney::{bad_set_perimeter, build_covering, classify, PerimeterReport, WhitneyCovering};

/// Smallest cube side in cells used by default.
pub const DEFAULT_MIN_SIDE: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoveringError {
    #[error("grid too coarse for covering: δ = {delta} needs at least {min_side} cells of size h = {h}")]
    GridTooCoarse { delta: f64, h: f64, min_side: usize },
    #[error("invalid covering scale δ = {0}")]
    InvalidDelta(f64),
    #[error("crown selection infeasible: {0}")]
    CrownInfeasible(String),
    #[error("the construction is set on the unit cube; grid half-width is {0}")]
    UnitCubeRequired(f64),
    #[error("covering defect: {0}")]
    Defect(String),
    #[error(transparent)]
    Field(#[from] field_core::FieldError),
}
