//! Lattice-aligned dyadic cubes and their concentric enlargements.

use field_core::{AaBox, Face, GridSpec};
use serde::{Deserialize, Serialize};

/// Concentric scalings of a cube: `q`, `q′ = 7/6 q`, `q″ = 4/3 q`, `q‴ = 3/2 q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enlargement {
    Base,
    Prime,
    Double,
    Triple,
}

impl Enlargement {
    /// Half-width in units of `side / 12`.
    pub fn twelfths(self) -> i64 {
        match self {
            Enlargement::Base => 6,
            Enlargement::Prime => 7,
            Enlargement::Double => 8,
            Enlargement::Triple => 9,
        }
    }

    pub fn factor(self) -> f64 {
        self.twelfths() as f64 / 6.0
    }
}

/// Cube `anchor + [0, side)^dim` in cell units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub anchor: [usize; 3],
    pub side: usize,
}

/// Half-open cell range `lo..hi` along one axis, clipped to the grid.
fn axis_range(anchor: usize, side: usize, twelfths: i64, m: usize) -> (usize, usize) {
    let x = 6 * (2 * anchor as i64 + side as i64);
    let ns = twelfths * side as i64;
    let lo = (x - ns - 6).div_euclid(12) + 1;
    let hi = -((-(x + ns - 6)).div_euclid(12)) - 1 + 1;
    (lo.clamp(0, m as i64) as usize, hi.clamp(0, m as i64) as usize)
}

impl DyadicCube {
    /// Side length `δ_q`.
    pub fn side_length(&self, grid: &GridSpec) -> f64 {
        self.side as f64 * grid.h()
    }

    pub fn center(&self, grid: &GridSpec) -> [f64; 3] {
        let mut c = [0.0; 3];
        for (a, ca) in c.iter_mut().enumerate().take(grid.dim) {
            *ca = -grid.half_width + (self.anchor[a] as f64 + 0.5 * self.side as f64) * grid.h();
        }
        c
    }

    pub fn bounding_box(&self, grid: &GridSpec, e: Enlargement) -> AaBox {
        AaBox::cube(self.center(grid), 0.5 * e.factor() * self.side_length(grid))
    }

    /// Per-axis cell ranges of the enlargement (cells with centre strictly inside).
    pub fn ranges(&self, grid: &GridSpec, e: Enlargement) -> [(usize, usize); 3] {
        let mut r = [(0, 1); 3];
        for (a, ra) in r.iter_mut().enumerate().take(grid.dim) {
            *ra = axis_range(self.anchor[a], self.side, e.twelfths(), grid.cells_per_side);
        }
        r
    }

    pub fn cells(&self, grid: &GridSpec, e: Enlargement) -> Vec<usize> {
        let r = self.ranges(grid, e);
        let mut out = Vec::new();
        for i in r[0].0..r[0].1 {
            for j in r[1].0..r[1].1 {
                for k in r[2].0..r[2].1 {
                    out.push(grid.index([i, j, k]));
                }
            }
        }
        out
    }

    pub fn cell_count(&self, grid: &GridSpec, e: Enlargement) -> usize {
        self.ranges(grid, e).iter().take(grid.dim).map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains_cell(&self, grid: &GridSpec, idx: usize, e: Enlargement) -> bool {
        let c = grid.coords(idx);
        let r = self.ranges(grid, e);
        (0..grid.dim).all(|a| c[a] >= r[a].0 && c[a] < r[a].1)
    }

    /// Face centre strictly inside the enlargement.
    pub fn contains_face(&self, grid: &GridSpec, face: Face, e: Enlargement) -> bool {
        let c = grid.coords(face.cell);
        let ns = e.twelfths() * self.side as i64;
        (0..grid.dim).all(|a| {
            let twice = if a == face.axis { 2 * c[a] as i64 + 2 } else { 2 * c[a] as i64 + 1 };
            6 * (twice - 2 * self.anchor[a] as i64 - self.side as i64).abs() < ns
        })
    }

    /// Volume `|q|` in cells.
    pub fn volume_cells(&self, dim: usize) -> usize {
        self.side.pow(dim as u32)
    }
}

/// Cell count of the intersection of two cell boxes.
pub fn overlap_cells(a: &[(usize, usize); 3], b: &[(usize, usize); 3], dim: usize) -> usize {
    (0..dim)
        .map(|k| {
            let lo = a[k].0.max(b[k].0);
            let hi = a[k].1.min(b[k].1);
            hi.saturating_sub(lo)
        })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_range_is_the_cube() {
        assert_eq!(axis_range(8, 4, 6, 64), (8, 12));
        assert_eq!(axis_range(0, 8, 6, 64), (0, 8));
    }

    #[test]
    fn enlargements_match_continuum_counts() {
        // side 12: q' half 7, q'' half 8, q''' half 9 cells
        assert_eq!(axis_range(24, 12, 7, 256), (23, 37));
        assert_eq!(axis_range(24, 12, 8, 256), (22, 38));
        assert_eq!(axis_range(24, 12, 9, 256), (21, 39));
        // side 6: q' half 3.5 lies on cell centres, which are excluded
        assert_eq!(axis_range(12, 6, 7, 256), (12, 18));
    }

    #[test]
    fn face_membership_agrees_with_box() {
        let g = GridSpec::unit(2, 64).unwrap();
        let q = DyadicCube { level: 0, anchor: [20, 28, 0], side: 8 };
        for e in [Enlargement::Base, Enlargement::Prime, Enlargement::Double, Enlargement::Triple] {
            let bx = q.bounding_box(&g, e);
            for f in g.interior_faces() {
                let c = g.face_center(f);
                let inside = bx.contains(&c, 2);
                let near_edge = (0..2).any(|a| (c[a] - bx.lo[a]).abs() < 1e-12 || (c[a] - bx.hi[a]).abs() < 1e-12);
                if !near_edge {
                    assert_eq!(inside, q.contains_face(&g, f, e));
                }
            }
        }
    }
}
