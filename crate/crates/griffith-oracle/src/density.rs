//! Empirical density lower bounds at points of the jump set of a minimizer.

use field_core::{energy_g0, Face, Region, Vec3};
use serde::Serialize;

use crate::search::OracleResult;
use crate::solver::Problem;
use crate::OracleError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub axis: usize,
    pub cell: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub rho: f64,
    /// `G_0(u, B_ρ(x)) / ρ^{n−1}`.
    pub energy_ratio: f64,
    /// `H^{n−1}(J ∩ B_ρ(x)) / ρ^{n−1}`.
    pub jump_ratio: f64,
}

/// Minimum over centres for one radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusSummary {
    pub rho: f64,
    pub balls: usize,
    pub theta0: f64,
    pub theta1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    /// The minimizer has no jump, so there is nothing to check.
    pub vacuous: bool,
    pub rows: Vec<DensityRow>,
    pub radii: Vec<RadiusSummary>,
    pub theta0: f64,
    pub theta1: f64,
    /// Both minima positive and every radius tested on at least one ball.
    pub pass: bool,
}

/// Balls are centred at the face centres of the minimizer's jump set and
/// voxelized by cell centre for the energy and by face centre for the jump.
/// A ball that is not compactly inside the domain is skipped.
pub fn density_lower_bound_check(result: &OracleResult, problem: &Problem, radii: &[f64]) -> Result<DensityReport, OracleError> {
    let grid = *problem.grid();
    let dim = grid.dim;
    let jumps = problem.jumps_of(&result.best_config)?;
    if jumps.is_empty() {
        return Ok(DensityReport {
            vacuous: true,
            rows: Vec::new(),
            radii: Vec::new(),
            theta0: 0.0,
            theta1: 0.0,
            pass: false,
        });
    }
    let centres: Vec<(Face, Vec3)> = jumps.faces().into_iter().map(|f| (f, grid.face_center(f))).collect();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &rho in radii {
        let scale = rho.powi(dim as i32 - 1);
        let mut summary = RadiusSummary { rho, balls: 0, theta0: f64::INFINITY, theta1: f64::INFINITY };
        for &(f, x) in &centres {
            if (0..dim).any(|a| x[a].abs() + rho >= grid.half_width) {
                continue;
            }
            let ball = Region::Ball { center: x, radius: rho };
            let e = energy_g0(&result.minimizer_u, &jumps, &problem.params, &ball)?;
            let row = DensityRow {
                axis: f.axis,
                cell: f.cell,
                x: x[0],
                y: x[1],
                z: x[2],
                rho,
                energy_ratio: e.total() / scale,
                jump_ratio: jumps.measure_in(&ball) / scale,
            };
            summary.balls += 1;
            summary.theta0 = summary.theta0.min(row.energy_ratio);
            summary.theta1 = summary.theta1.min(row.jump_ratio);
            rows.push(row);
        }
        summaries.push(summary);
    }
    let theta0 = summaries.iter().map(|s| s.theta0).fold(f64::INFINITY, f64::min);
    let theta1 = summaries.iter().map(|s| s.theta1).fold(f64::INFINITY, f64::min);
    let pass = !summaries.is_empty() && summaries.iter().all(|s| s.balls > 0) && theta0 > 0.0 && theta1 > 0.0;
    Ok(DensityReport { vacuous: false, rows, radii: summaries, theta0, theta1, pass })
}
