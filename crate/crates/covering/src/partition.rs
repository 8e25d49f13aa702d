//! Partition of unity subordinate to the enlarged good cubes `q′_i`.

use field_core::GridSpec;
use serde::Serialize;

use crate::cube::{DyadicCube, Enlargement};
use crate::whitney::WhitneyCovering;
use crate::CoveringError;

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: 1 for `t ≤ 0`, 0 for `t ≥ 1`, returned with its derivative.
pub fn plateau(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (1.0, 0.0);
    }
    if t >= 1.0 {
        return (0.0, 0.0);
    }
    let a = psi(1.0 - t);
    let b = psi(t);
    let s = a + b;
    let da = -a / ((1.0 - t) * (1.0 - t));
    let db = b / (t * t);
    (a / s, (da * b - a * db) / (s * s))
}

/// `φ̃_q` and its gradient at a cell centre: a tensor product of plateaus,
/// equal to 1 on `q` and vanishing outside `q′`.
pub fn bump(grid: &GridSpec, q: &DyadicCube, cell: usize) -> (f64, [f64; 3]) {
    let c = grid.coords(cell);
    let s = q.side as f64;
    let ramp = s / 12.0;
    let mut vals = [1.0; 3];
    let mut ders = [0.0; 3];
    for a in 0..grid.dim {
        let x = c[a] as f64 + 0.5;
        let centre = q.anchor[a] as f64 + 0.5 * s;
        let d = x - centre;
        let (v, dv) = plateau((d.abs() - 0.5 * s) / ramp);
        vals[a] = v;
        ders[a] = dv * d.signum() / (ramp * grid.h());
    }
    let value = vals.iter().product();
    let mut grad = [0.0; 3];
    for a in 0..grid.dim {
        grad[a] = ders[a] * (0..grid.dim).filter(|&b| b != a).map(|b| vals[b]).product::<f64>();
    }
    (value, grad)
}

/// Weights `φ_i` per cell of `Q^{i₀} \ B` in compressed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOfUnity {
    offsets: Vec<usize>,
    entries: Vec<(u32, f64)>,
    pub report: PartitionReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionReport {
    /// `max |Σφ_i − 1|` over `Q^{i₀} \ B`.
    pub max_sum_error: f64,
    /// `max |∇φ_i| δ_{q_i}`.
    pub gradient_constant: f64,
    /// Largest number of non-zero weights at a point.
    pub max_terms: usize,
}

impl PartitionOfUnity {
    /// `(cube index, φ_i)` pairs at a cell, ordered by cube index.
    pub fn weights(&self, cell: usize) -> &[(u32, f64)] {
        &self.entries[self.offsets[cell]..self.offsets[cell + 1]]
    }
}

pub fn partition_of_unity(covering: &WhitneyCovering) -> Result<PartitionOfUnity, CoveringError> {
    let grid = covering.grid;
    let n = grid.num_cells();
    let blend = covering.blend_mask();
    let mut raw: Vec<(usize, u32, f64, [f64; 3])> = Vec::new();
    for (ci, q) in covering.cubes.iter().enumerate() {
        if !covering.good[ci] {
            continue;
        }
        for c in q.cells(&grid, Enlargement::Prime) {
            if !blend[c] {
                continue;
            }
            let (v, g) = bump(&grid, q, c);
            if v > 0.0 {
                raw.push((c, ci as u32, v, g));
            }
        }
    }
    raw.sort_by_key(|r| (r.0, r.1));

    let mut offsets = vec![0usize; n + 1];
    let mut entries = Vec::with_capacity(raw.len());
    let mut report = PartitionReport { max_sum_error: 0.0, gradient_constant: 0.0, max_terms: 0 };
    let mut k = 0;
    for c in 0..n {
        offsets[c] = entries.len();
        let start = k;
        while k < raw.len() && raw[k].0 == c {
            k += 1;
        }
        let group = &raw[start..k];
        if blend[c] && group.is_empty() {
            return Err(CoveringError::Defect(format!("no weight at cell {c} of Q^i0 \\ B")));
        }
        if group.is_empty() {
            continue;
        }
        let total: f64 = group.iter().map(|r| r.2).sum();
        let mut gtotal = [0.0; 3];
        for r in group {
            for a in 0..3 {
                gtotal[a] += r.3[a];
            }
        }
        let mut sum = 0.0;
        for r in group {
            let w = r.2 / total;
            sum += w;
            let side = covering.cubes[r.1 as usize].side_length(&grid);
            let mut g2 = 0.0;
            for a in 0..3 {
                let ga = r.3[a] / total - r.2 * gtotal[a] / (total * total);
                g2 += ga * ga;
            }
            report.gradient_constant = report.gradient_constant.max(g2.sqrt() * side);
            entries.push((r.1, w));
        }
        report.max_sum_error = report.max_sum_error.max((sum - 1.0).abs());
        report.max_terms = report.max_terms.max(group.len());
    }
    offsets[n] = entries.len();
    Ok(PartitionOfUnity { offsets, entries, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_is_monotone_and_smooth() {
        let mut prev = 1.0;
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let (v, d) = plateau(t);
            assert!(v <= prev + 1e-15 && d <= 0.0);
            prev = v;
        }
        let eps = 1e-6;
        for t in [0.2, 0.5, 0.8] {
            let fd = (plateau(t + eps).0 - plateau(t - eps).0) / (2.0 * eps);
            assert!((fd - plateau(t).1).abs() < 1e-6);
        }
        assert!((plateau(0.5).0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bump_is_one_on_the_cube() {
        let g = GridSpec::unit(2, 64).unwrap();
        let q = DyadicCube { level: 0, anchor: [24, 24, 0], side: 12 };
        for c in q.cells(&g, Enlargement::Base) {
            assert_eq!(bump(&g, &q, c).0, 1.0);
        }
        for c in q.cells(&g, Enlargement::Double) {
            if !q.contains_cell(&g, c, Enlargement::Prime) {
                assert_eq!(bump(&g, &q, c).0, 0.0);
            }
        }
    }
}
