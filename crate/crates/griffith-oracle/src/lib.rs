//! Brute-force minimization of the quadratic Griffith energy over explicit
//! crack configurations on small grids, the deviation from minimality it
//! certifies, density bounds at the jump of a minimizer, and the
//! vanishing-jump sequences that exercise lower semicontinuity.

pub mod density;
pub mod deviation;
pub mod harness;
pub mod instances;
pub mod search;
pub mod solver;

use thiserror::Error;

pub use density::{density_lower_bound_check, DensityReport, DensityRow, RadiusSummary};
pub use deviation::{deviation_psi0, Deviation, DeviationSummary};
pub use harness::{
    sequence_member, vanishing_jump_harness, DecayRow, Generator, HarnessConfig, HarnessReport, LevelRow, Member,
    SemicontinuityRow, SequenceSpec,
};
pub use search::{
    brute_force_minimize, greedy_minimize, ConfigEnergy, CrackConfig, GreedyResult, OracleResult, EXHAUSTIVE_LIMIT,
};
pub use solver::{faces_in, solve_elastic, Boundary, ElasticSolution, Functional, Problem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("singular elastic system: add fidelity or boundary data")]
    Singular,
    #[error("the oracle needs p = 2, got p = {0}")]
    Exponent(f64),
    #[error("{count} candidate faces exceed the exhaustive limit of {limit}; use the heuristic search")]
    TooManyCandidates { count: usize, limit: usize },
    #[error("invalid candidate: {0}")]
    InvalidCandidate(String),
    #[error("linear solve stopped at relative residual {0:e}")]
    NotConverged(f64),
    #[error("no level of the sequence is inside the approximation regime")]
    NoLevels,
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Approx(#[from] approximator::ApproxError),
    #[error(transparent)]
    Korn(#[from] kornfit::KornError),
    #[error(transparent)]
    Field(#[from] field_core::FieldError),
}
