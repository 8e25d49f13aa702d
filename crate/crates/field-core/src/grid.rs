//! Uniform cubic grids on `Q_r = (-r, r)^dim` and the regions used for integration.

use serde::{Deserialize, Serialize};

use crate::FieldError;

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Uniform grid of `M^dim` cells covering `(-r, r)^dim`.
///
/// Cells are indexed row-major with the first axis varying slowest.
/// In two dimensions the third coordinate of every point is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub cells_per_side: usize,
    pub half_width: f64,
}

/// The face between `cell` and its neighbour in the positive `axis` direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Face {
    pub axis: usize,
    pub cell: usize,
}

impl GridSpec {
    pub fn new(dim: usize, cells_per_side: usize, half_width: f64) -> Result<Self, FieldError> {
        if dim != 2 && dim != 3 {
            return Err(FieldError::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if cells_per_side < 8 || !cells_per_side.is_power_of_two() {
            return Err(FieldError::InvalidGrid(format!(
                "cells per side must be a power of two >= 8, got {cells_per_side}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(FieldError::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        Ok(Self { dim, cells_per_side, half_width })
    }

    /// Grid on the unit cube `Q_1`.
    pub fn unit(dim: usize, cells_per_side: usize) -> Result<Self, FieldError> {
        Self::new(dim, cells_per_side, 1.0)
    }

    /// Grid without the power-of-two restriction, for small oracle problems.
    pub fn small(dim: usize, cells_per_side: usize, half_width: f64) -> Result<Self, FieldError> {
        if dim != 2 && dim != 3 {
            return Err(FieldError::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if cells_per_side < 2 {
            return Err(FieldError::InvalidGrid("need at least two cells per side".into()));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(FieldError::InvalidGrid(format!("half width must be positive, got {half_width}")));
        }
        Ok(Self { dim, cells_per_side, half_width })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.cells_per_side as f64
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_side.pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn face_area(&self) -> f64 {
        self.h().powi(self.dim as i32 - 1)
    }

    /// Index distance between a cell and its neighbour along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.cells_per_side.pow((self.dim - 1 - axis) as u32)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let m = self.cells_per_side;
        let mut c = [0usize; 3];
        let mut rest = idx;
        for axis in (0..self.dim).rev() {
            c[axis] = rest % m;
            rest /= m;
        }
        c
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        let mut idx = 0;
        for &ci in c.iter().take(self.dim) {
            idx = idx * self.cells_per_side + ci;
        }
        idx
    }

    /// Index of the cell with signed coordinates, if it lies in the grid.
    pub fn index_signed(&self, c: [i64; 3]) -> Option<usize> {
        let m = self.cells_per_side as i64;
        let mut idx = 0usize;
        for &ci in c.iter().take(self.dim) {
            if ci < 0 || ci >= m {
                return None;
            }
            idx = idx * self.cells_per_side + ci as usize;
        }
        Some(idx)
    }

    /// Coordinate of a cell centre along one axis.
    pub fn center_coord(&self, c: usize) -> f64 {
        -self.half_width + (c as f64 + 0.5) * self.h()
    }

    pub fn center(&self, idx: usize) -> Vec3 {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.center_coord(c[a]);
        }
        x
    }

    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let c = self.coords(idx)[axis];
        if forward {
            (c + 1 < self.cells_per_side).then(|| idx + self.stride(axis))
        } else {
            (c > 0).then(|| idx - self.stride(axis))
        }
    }

    /// The face is interior when both adjacent cells exist.
    pub fn is_interior_face(&self, face: Face) -> bool {
        face.axis < self.dim && face.cell < self.num_cells() && self.coords(face.cell)[face.axis] + 1 < self.cells_per_side
    }

    pub fn face_cells(&self, face: Face) -> (usize, usize) {
        (face.cell, face.cell + self.stride(face.axis))
    }

    pub fn face_center(&self, face: Face) -> Vec3 {
        let mut x = self.center(face.cell);
        x[face.axis] += 0.5 * self.h();
        x
    }

    /// All interior faces, ordered by axis then cell.
    pub fn interior_faces(&self) -> impl Iterator<Item = Face> + '_ {
        (0..self.dim).flat_map(move |axis| {
            (0..self.num_cells())
                .map(move |cell| Face { axis, cell })
                .filter(move |f| self.is_interior_face(*f))
        })
    }
}

/// Open axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AaBox {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl AaBox {
    pub fn cube(center: Vec3, half: f64) -> Self {
        Self {
            lo: [center[0] - half, center[1] - half, center[2] - half],
            hi: [center[0] + half, center[1] + half, center[2] + half],
        }
    }

    /// `Q_t = (-t, t)^dim` centred at the origin.
    pub fn centered(half: f64) -> Self {
        Self::cube([0.0; 3], half)
    }

    pub fn contains(&self, x: &Vec3, dim: usize) -> bool {
        (0..dim).all(|a| x[a] > self.lo[a] && x[a] < self.hi[a])
    }

    /// The box grown by `pad` on every side and clipped to `(-r, r)^dim`.
    pub fn padded(&self, pad: f64, r: f64) -> Self {
        let mut out = *self;
        for a in 0..3 {
            out.lo[a] = (self.lo[a] - pad).max(-r);
            out.hi[a] = (self.hi[a] + pad).min(r);
        }
        out
    }

    pub fn volume(&self, dim: usize) -> f64 {
        (0..dim).map(|a| (self.hi[a] - self.lo[a]).max(0.0)).product()
    }
}

/// Integration region. Cells belong by centre, faces by face centre;
/// for explicit cell masks a face belongs when both adjacent cells do.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    All,
    Box(AaBox),
    Ball { center: Vec3, radius: f64 },
    Cells(Vec<bool>),
    Diff(Box<Region>, Box<Region>),
}

impl Region {
    pub fn cube(half: f64) -> Self {
        Region::Box(AaBox::centered(half))
    }

    /// `Q_outer \ Q_inner` for concentric cubes.
    pub fn annulus(outer: f64, inner: f64) -> Self {
        Region::Diff(Box::new(Region::cube(outer)), Box::new(Region::cube(inner)))
    }

    fn contains_point(&self, x: &Vec3, dim: usize) -> Option<bool> {
        match self {
            Region::All => Some(true),
            Region::Box(b) => Some(b.contains(x, dim)),
            Region::Ball { center, radius } => {
                let d2: f64 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum();
                Some(d2 < radius * radius)
            }
            Region::Cells(_) => None,
            Region::Diff(a, b) => Some(a.contains_point(x, dim)? && !b.contains_point(x, dim)?),
        }
    }

    pub fn contains_cell(&self, grid: &GridSpec, idx: usize) -> bool {
        match self {
            Region::Cells(mask) => mask[idx],
            Region::Diff(a, b) => a.contains_cell(grid, idx) && !b.contains_cell(grid, idx),
            _ => self.contains_point(&grid.center(idx), grid.dim).unwrap_or(false),
        }
    }

    pub fn contains_face(&self, grid: &GridSpec, face: Face) -> bool {
        match self {
            Region::Cells(mask) => {
                let (c0, c1) = grid.face_cells(face);
                mask[c0] && mask[c1]
            }
            Region::Diff(a, b) => a.contains_face(grid, face) && !b.contains_face(grid, face),
            _ => self.contains_point(&grid.face_center(face), grid.dim).unwrap_or(false),
        }
    }

    pub fn cell_mask(&self, grid: &GridSpec) -> Vec<bool> {
        (0..grid.num_cells()).map(|i| self.contains_cell(grid, i)).collect()
    }

    pub fn cells(&self, grid: &GridSpec) -> Vec<usize> {
        (0..grid.num_cells()).filter(|&i| self.contains_cell(grid, i)).collect()
    }
}

pub(crate) fn frob2(m: &Mat3) -> f64 {
    m.iter().flatten().map(|v| v * v).sum()
}

pub fn norm3(v: &Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Frobenius norm of a matrix.
pub fn frobenius(m: &Mat3) -> f64 {
    frob2(m).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = GridSpec::unit(3, 8).unwrap();
        for idx in [0, 7, 63, 100, 511] {
            assert_eq!(g.index(g.coords(idx)), idx);
        }
        assert_eq!(g.stride(0), 64);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::unit(4, 16).is_err());
        assert!(GridSpec::unit(2, 12).is_err());
        assert!(GridSpec::unit(2, 4).is_err());
        assert!(GridSpec::new(2, 16, 0.0).is_err());
    }

    #[test]
    fn centers_are_symmetric() {
        let g = GridSpec::unit(2, 16).unwrap();
        let first = g.center(0);
        let last = g.center(g.num_cells() - 1);
        assert!((first[0] + last[0]).abs() < 1e-15);
        assert!((first[0] + 1.0 - 0.5 * g.h()).abs() < 1e-15);
    }

    #[test]
    fn face_membership_in_box_is_open() {
        let g = GridSpec::unit(2, 16).unwrap();
        let q = Region::cube(0.5);
        // face on the plane x0 = 0.5 is not inside the open box
        let cell = g.index([11, 8, 0]);
        let f = Face { axis: 0, cell };
        assert!((g.face_center(f)[0] - 0.5).abs() < 1e-15);
        assert!(!q.contains_face(&g, f));
    }
}
