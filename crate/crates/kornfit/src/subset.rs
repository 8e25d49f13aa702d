//! Norms of affine maps on subsets of a cube.

use covering::{DyadicCube, Enlargement};
use field_core::{norm3, GridSpec};
use serde::{Deserialize, Serialize};

use crate::motion::AffineMap;
use crate::KornError;

/// Both sides of `∫_ω|a|^p ≤ c (|ω|/|q|) ∫_q|a|^p` and of its variants on `θq`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetBound {
    pub lhs: f64,
    /// `(|ω|/|q|) ∫_q|a|^p`.
    pub rhs: f64,
    pub volume_ratio: f64,
    pub constant: f64,
    pub theta: f64,
    /// `(|ω|/|q|) ∫_{θq}|a|^p`.
    pub rhs_theta: f64,
    pub constant_theta: f64,
    /// `‖a‖_{L^p(q)} / ‖a‖_{L^p(θq)}` and its bound `θ^{−(n/p+1)}`.
    pub scaling_ratio: f64,
    pub scaling_bound: f64,
    /// `c_θ |ω|/|q| ≤ 1/2`, so that `ω` can be absorbed on the right.
    pub absorption_applicable: bool,
    /// `∫_ω|a|^p / ((|ω|/|q|) ∫_{θq∖ω}|a|^p)`, at most `2 c_θ` when applicable.
    pub absorbed_constant: f64,
}

fn quotient(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Cells of `q` whose centres lie in the concentric cube scaled by `theta`.
pub fn shrunk_cells(grid: &GridSpec, cube: &DyadicCube, theta: f64) -> Vec<usize> {
    cube.cells(grid, Enlargement::Base)
        .into_iter()
        .filter(|&c| {
            let x = grid.coords(c);
            (0..grid.dim).all(|a| {
                let d = (2 * x[a] + 1) as f64 - (2 * cube.anchor[a] + cube.side) as f64;
                d.abs() < theta * cube.side as f64 - 1e-9
            })
        })
        .collect()
}

pub fn affine_subset_bound(
    grid: &GridSpec,
    a: &AffineMap,
    cube: &DyadicCube,
    omega: &[usize],
    p: f64,
    theta: f64,
) -> SubsetBound {
    let vol = grid.cell_volume();
    let dim = grid.dim;
    let pw = |c: usize| norm3(&a.eval(&grid.center(c))).powf(p) * vol;
    let q = cube.cells(grid, Enlargement::Base);
    let mut in_omega = std::collections::HashSet::new();
    for &c in omega {
        if cube.contains_cell(grid, c, Enlargement::Base) {
            in_omega.insert(c);
        }
    }
    let volume_ratio = in_omega.len() as f64 / q.len() as f64;
    let lhs: f64 = in_omega.iter().map(|&c| pw(c)).sum();
    let full: f64 = q.iter().map(|&c| pw(c)).sum();
    let tq = shrunk_cells(grid, cube, theta);
    let on_theta: f64 = tq.iter().map(|&c| pw(c)).sum();
    let theta_minus: f64 = tq.iter().filter(|c| !in_omega.contains(c)).map(|&c| pw(c)).sum();
    let rhs = volume_ratio * full;
    let rhs_theta = volume_ratio * on_theta;
    let constant_theta = quotient(lhs, rhs_theta);
    let scaling_ratio = quotient(full.powf(1.0 / p), on_theta.powf(1.0 / p));
    SubsetBound {
        lhs,
        rhs,
        volume_ratio,
        constant: quotient(lhs, rhs),
        theta,
        rhs_theta,
        constant_theta,
        scaling_ratio,
        scaling_bound: theta.powf(-(dim as f64 / p + 1.0)),
        absorption_applicable: constant_theta * volume_ratio <= 0.5,
        absorbed_constant: quotient(lhs, volume_ratio * theta_minus),
    }
}

/// Cells common to two cube enlargements.
pub fn overlap_region(grid: &GridSpec, qi: &DyadicCube, qj: &DyadicCube, e: Enlargement) -> Vec<usize> {
    qi.cells(grid, e).into_iter().filter(|&c| qj.contains_cell(grid, c, e)).collect()
}

/// `‖a_i − a_j‖_{L^s}` over `cells`.
pub fn neighbor_affine_distance(
    grid: &GridSpec,
    ai: &AffineMap,
    aj: &AffineMap,
    cells: &[usize],
    exponent: f64,
) -> Result<f64, KornError> {
    if cells.is_empty() {
        return Err(KornError::EmptyOverlap);
    }
    let d = ai.sub(aj);
    let sum: f64 = cells.iter().map(|&c| norm3(&d.eval(&grid.center(c))).powf(exponent)).sum();
    Ok((sum * grid.cell_volume()).powf(1.0 / exponent))
}
