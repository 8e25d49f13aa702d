//! Discrete trace comparison on `∂Q_R`: the share of cells in shrinking
//! inner half-balls where `ũ` and `u` differ by more than `ε`.

use field_core::{norm3, sub3, DisplacementField, Vec3};
use serde::{Deserialize, Serialize};

use crate::pipeline::ApproxResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub epsilons: Vec<f64>,
    /// Radii in cells, largest first.
    pub radii_cells: Vec<usize>,
    /// Sample points per face of `∂Q_R` and tangential axis.
    pub samples_per_axis: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { epsilons: vec![1e-2, 1e-3], radii_cells: vec![8, 4, 2], samples_per_axis: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub point: Vec3,
    pub epsilon: f64,
    /// `|{|ũ−u| > ε} ∩ B⁻_r(y)| / |B⁻_r(y)|` per radius.
    pub ratios: Vec<f64>,
    pub decays: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub radii: Vec<f64>,
    pub points: Vec<TracePoint>,
    pub max_ratio_at_smallest: f64,
    pub pass: bool,
}

/// Points on the faces of the centred cube of half-width `r`, on a regular
/// tangential lattice that avoids edges.
fn boundary_points(dim: usize, r: f64, per_axis: usize) -> Vec<Vec3> {
    let ts: Vec<f64> = (0..per_axis).map(|k| r * (-1.0 + 2.0 * (k as f64 + 0.5) / per_axis as f64) * 0.9).collect();
    let mut out = Vec::new();
    for axis in 0..dim {
        for sign in [-1.0, 1.0] {
            let tangential: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
            let count = per_axis.pow(tangential.len() as u32);
            for flat in 0..count {
                let mut x = [0.0; 3];
                x[axis] = sign * r;
                let mut rest = flat;
                for &t in &tangential {
                    x[t] = ts[rest % per_axis];
                    rest /= per_axis;
                }
                out.push(x);
            }
        }
    }
    out
}

pub fn boundary_trace_check(u: &DisplacementField, result: &ApproxResult, config: &TraceConfig) -> TraceReport {
    let grid = *u.grid();
    let dim = grid.dim;
    let h = grid.h();
    let r_box = result.radius;
    let radii: Vec<f64> = config.radii_cells.iter().map(|&k| k as f64 * h).collect();
    let diff: Vec<f64> = (0..grid.num_cells()).map(|c| norm3(&sub3(result.u_tilde.value(c), u.value(c)))).collect();
    let inside = |x: &Vec3| (0..dim).all(|a| x[a].abs() < r_box);
    let mut points = Vec::new();
    for y in boundary_points(dim, r_box, config.samples_per_axis) {
        for &eps in &config.epsilons {
            let ratios: Vec<f64> = radii
                .iter()
                .map(|&rho| {
                    let (mut total, mut hit) = (0usize, 0usize);
                    for c in 0..grid.num_cells() {
                        let x = grid.center(c);
                        let d2: f64 = (0..dim).map(|a| (x[a] - y[a]).powi(2)).sum();
                        if d2 < rho * rho && inside(&x) {
                            total += 1;
                            if diff[c] > eps {
                                hit += 1;
                            }
                        }
                    }
                    if total == 0 {
                        0.0
                    } else {
                        hit as f64 / total as f64
                    }
                })
                .collect();
            let decays = ratios.windows(2).all(|w| w[1] <= w[0]);
            points.push(TracePoint { point: y, epsilon: eps, ratios, decays });
        }
    }
    let max_ratio_at_smallest = points.iter().filter_map(|p| p.ratios.last().copied()).fold(0.0, f64::max);
    let pass = points.iter().all(|p| p.decays);
    TraceReport { radii, points, max_ratio_at_smallest, pass }
}
