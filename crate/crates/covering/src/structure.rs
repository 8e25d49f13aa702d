//! Exhaustive structural checks over all neighbouring cube pairs.

use serde::Serialize;

use crate::cube::{overlap_cells, Enlargement};
use crate::whitney::WhitneyCovering;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureReport {
    /// Pairs with `q′_i ∩ q′_j ≠ ∅`.
    pub prime_pairs: usize,
    /// Pairs among those whose side ratio is not in `{1/2, 1, 2}`.
    pub ratio_violations: usize,
    /// Pairs with `q″_i ∩ q″_j ≠ ∅`.
    pub double_pairs: usize,
    /// `min |q″_i ∩ q″_j| / max(|q_i|, |q_j|)` over those pairs.
    pub min_overlap_ratio: f64,
    /// Pairs falling below `4^{−dim}`.
    pub overlap_violations: usize,
    pub sigma_constant: f64,
}

/// Visits every unordered pair of cubes whose enlargements `e` share a cell.
fn for_each_pair(cov: &WhitneyCovering, e: Enlargement, mut visit: impl FnMut(usize, usize, usize)) {
    let grid = &cov.grid;
    let dim = grid.dim;
    let ranges: Vec<_> = cov.cubes.iter().map(|q| q.ranges(grid, e)).collect();
    let mut seen = Vec::new();
    for (i, q) in cov.cubes.iter().enumerate() {
        // neighbours are at most twice as large, so q'' of a neighbour reaches
        // at most side/3 beyond q; scan the owners of a 5/3 scaling of q
        let reach = q.side.div_ceil(3) + 2 * q.side / 3 + 1;
        let mut lo = [0usize; 3];
        let mut hi = [1usize; 3];
        for a in 0..dim {
            lo[a] = q.anchor[a].saturating_sub(reach);
            hi[a] = (q.anchor[a] + q.side + reach).min(grid.cells_per_side);
        }
        seen.clear();
        for x in lo[0]..hi[0] {
            for y in lo[1]..hi[1] {
                for z in lo[2]..hi[2] {
                    let o = cov.owner[grid.index([x, y, z])];
                    if o != u32::MAX && (o as usize) > i {
                        seen.push(o as usize);
                    }
                }
            }
        }
        seen.sort_unstable();
        seen.dedup();
        for &j in &seen {
            let shared = overlap_cells(&ranges[i], &ranges[j], dim);
            if shared > 0 {
                visit(i, j, shared);
            }
        }
    }
}

pub fn check_structure(cov: &WhitneyCovering) -> StructureReport {
    let dim = cov.grid.dim;
    let mut report = StructureReport {
        prime_pairs: 0,
        ratio_violations: 0,
        double_pairs: 0,
        min_overlap_ratio: f64::INFINITY,
        overlap_violations: 0,
        sigma_constant: cov.sigma_constant(),
    };
    for_each_pair(cov, Enlargement::Prime, |i, j, _| {
        report.prime_pairs += 1;
        let (a, b) = (cov.cubes[i].side, cov.cubes[j].side);
        if !(a == b || a == 2 * b || b == 2 * a) {
            report.ratio_violations += 1;
        }
    });
    let floor = 4f64.powi(-(dim as i32));
    for_each_pair(cov, Enlargement::Double, |i, j, shared| {
        report.double_pairs += 1;
        let big = cov.cubes[i].volume_cells(dim).max(cov.cubes[j].volume_cells(dim)) as f64;
        let ratio = shared as f64 / big;
        report.min_overlap_ratio = report.min_overlap_ratio.min(ratio);
        if ratio < floor * (1.0 - 1e-12) {
            report.overlap_violations += 1;
        }
    });
    report
}
