//! Displacement fields, jump sets and the discrete symmetric gradient.

use crate::grid::{Face, GridSpec, Mat3, Region, Vec3};
use crate::FieldError;

/// Vector field sampled at cell centres. Components beyond `dim` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    grid: GridSpec,
    values: Vec<Vec3>,
}

impl DisplacementField {
    pub fn new(grid: GridSpec, values: Vec<Vec3>) -> Result<Self, FieldError> {
        if values.len() != grid.num_cells() {
            return Err(FieldError::ExtentMismatch { expected: grid.num_cells(), got: values.len() });
        }
        let mut values = values;
        for v in values.iter_mut() {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(FieldError::NonFinite);
            }
            for x in v.iter_mut().skip(grid.dim) {
                *x = 0.0;
            }
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![[0.0; 3]; grid.num_cells()] }
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&Vec3) -> Vec3) -> Result<Self, FieldError> {
        let values = (0..grid.num_cells()).map(|i| f(&grid.center(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> &Vec3 {
        &self.values[idx]
    }

    pub fn into_values(self) -> Vec<Vec3> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(∫_A |u|^p)^(1/p)` by the midpoint rule.
    pub fn lp_norm(&self, p: f64, region: &Region) -> f64 {
        let vol = self.grid.cell_volume();
        let s: f64 = (0..self.grid.num_cells())
            .filter(|&i| region.contains_cell(&self.grid, i))
            .map(|i| crate::grid::norm3(&self.values[i]).powf(p))
            .sum();
        (s * vol).powf(1.0 / p)
    }
}

/// Set of cracked interior faces.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSet {
    grid: GridSpec,
    masks: Vec<Vec<bool>>,
    count: usize,
}

impl JumpSet {
    pub fn empty(grid: GridSpec) -> Self {
        Self { grid, masks: vec![vec![false; grid.num_cells()]; grid.dim], count: 0 }
    }

    pub fn from_faces(grid: GridSpec, faces: impl IntoIterator<Item = Face>) -> Result<Self, FieldError> {
        let mut j = Self::empty(grid);
        for f in faces {
            j.insert(f)?;
        }
        Ok(j)
    }

    /// Inserts a face; returns whether it was new.
    pub fn insert(&mut self, face: Face) -> Result<bool, FieldError> {
        if !self.grid.is_interior_face(face) {
            return Err(FieldError::NotInterior { axis: face.axis, cell: face.cell });
        }
        let slot = &mut self.masks[face.axis][face.cell];
        if *slot {
            return Ok(false);
        }
        *slot = true;
        self.count += 1;
        Ok(true)
    }

    pub fn remove(&mut self, face: Face) -> bool {
        if face.axis >= self.grid.dim || face.cell >= self.grid.num_cells() {
            return false;
        }
        let slot = &mut self.masks[face.axis][face.cell];
        let was = *slot;
        *slot = false;
        if was {
            self.count -= 1;
        }
        was
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn contains(&self, face: Face) -> bool {
        face.axis < self.grid.dim && face.cell < self.grid.num_cells() && self.masks[face.axis][face.cell]
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Faces ordered by axis, then cell index.
    pub fn faces(&self) -> Vec<Face> {
        let mut out = Vec::with_capacity(self.count);
        for (axis, mask) in self.masks.iter().enumerate() {
            out.extend(mask.iter().enumerate().filter(|(_, &b)| b).map(|(cell, _)| Face { axis, cell }));
        }
        out
    }

    /// `H^{dim-1}(J)`: face count times face area.
    pub fn measure(&self) -> f64 {
        self.count as f64 * self.grid.face_area()
    }

    pub fn count_in(&self, region: &Region) -> usize {
        self.faces().into_iter().filter(|f| region.contains_face(&self.grid, *f)).count()
    }

    /// `H^{dim-1}(J ∩ A)`.
    pub fn measure_in(&self, region: &Region) -> f64 {
        self.count_in(region) as f64 * self.grid.face_area()
    }

    /// Faces of `self` not in `other`.
    pub fn difference(&self, other: &JumpSet) -> Vec<Face> {
        self.faces().into_iter().filter(|f| !other.contains(*f)).collect()
    }
}

/// Symmetric strain per cell; entries beyond `dim` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainField {
    grid: GridSpec,
    values: Vec<Mat3>,
}

impl StrainField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Mat3] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> &Mat3 {
        &self.values[idx]
    }

    /// The strain with `f` applied to every cell value.
    pub fn map(&self, f: impl Fn(&Mat3) -> Mat3) -> StrainField {
        StrainField { grid: self.grid, values: self.values.iter().map(f).collect() }
    }

    /// Frobenius norm `|e|` per cell.
    pub fn norms(&self) -> Vec<f64> {
        self.values.iter().map(crate::grid::frobenius).collect()
    }

    /// `(∫_A |e|^p)^(1/p)`.
    pub fn lp_norm(&self, p: f64, region: &Region) -> f64 {
        (self.lp_integral(p, region)).powf(1.0 / p)
    }

    /// `∫_A |e|^p`.
    pub fn lp_integral(&self, p: f64, region: &Region) -> f64 {
        let vol = self.grid.cell_volume();
        let s: f64 = (0..self.grid.num_cells())
            .filter(|&i| region.contains_cell(&self.grid, i))
            .map(|i| crate::grid::frobenius(&self.values[i]).powf(p))
            .sum();
        s * vol
    }
}

/// Up to two weighted taps of a first-difference stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub terms: [(usize, f64); 2],
    pub len: usize,
}

impl Stencil {
    pub fn taps(&self) -> &[(usize, f64)] {
        &self.terms[..self.len]
    }
}

/// Difference stencil for `∂_axis` at `cell`.
///
/// Central where both neighbours are reachable without crossing a cracked
/// face or the domain boundary, one-sided on the reachable side otherwise,
/// and empty for a cell cut off on both sides.
pub fn derivative_stencil(grid: &GridSpec, jumps: Option<&JumpSet>, cell: usize, axis: usize) -> Stencil {
    let h = grid.h();
    let cut = |f: Face| jumps.is_some_and(|j| j.contains(f));
    let plus = grid.neighbor(cell, axis, true).filter(|_| !cut(Face { axis, cell }));
    let minus = grid.neighbor(cell, axis, false).filter(|&m| !cut(Face { axis, cell: m }));
    match (minus, plus) {
        (Some(m), Some(p)) => Stencil { terms: [(p, 0.5 / h), (m, -0.5 / h)], len: 2 },
        (None, Some(p)) => Stencil { terms: [(p, 1.0 / h), (cell, -1.0 / h)], len: 2 },
        (Some(m), None) => Stencil { terms: [(cell, 1.0 / h), (m, -1.0 / h)], len: 2 },
        (None, None) => Stencil { terms: [(cell, 0.0); 2], len: 0 },
    }
}

/// Full discrete gradient `G[a][b] = ∂_b u_a` at one cell.
pub fn gradient_at(grid: &GridSpec, values: &[Vec3], jumps: Option<&JumpSet>, cell: usize) -> Mat3 {
    let mut g = [[0.0; 3]; 3];
    for b in 0..grid.dim {
        let st = derivative_stencil(grid, jumps, cell, b);
        for &(idx, w) in st.taps() {
            for (a, row) in g.iter_mut().enumerate().take(grid.dim) {
                row[b] += w * values[idx][a];
            }
        }
    }
    g
}

pub fn symmetrize(g: &Mat3) -> Mat3 {
    let mut e = [[0.0; 3]; 3];
    for a in 0..3 {
        e[a][a] = g[a][a];
        for b in (a + 1)..3 {
            let s = 0.5 * (g[a][b] + g[b][a]);
            e[a][b] = s;
            e[b][a] = s;
        }
    }
    e
}

/// Strain of raw cell values with an optional jump set.
pub fn strain_of_values(grid: &GridSpec, values: &[Vec3], jumps: Option<&JumpSet>) -> StrainField {
    let values_out = (0..grid.num_cells()).map(|c| symmetrize(&gradient_at(grid, values, jumps, c))).collect();
    StrainField { grid: *grid, values: values_out }
}

/// Discrete `e(u)`; stencils never cross a face of `J`.
pub fn symmetric_gradient(u: &DisplacementField, jumps: &JumpSet) -> Result<StrainField, FieldError> {
    if u.grid() != jumps.grid() {
        return Err(FieldError::GridMismatch);
    }
    Ok(strain_of_values(u.grid(), u.values(), Some(jumps)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> GridSpec {
        GridSpec::unit(2, 16).unwrap()
    }

    #[test]
    fn constant_field_has_zero_strain() {
        let g = grid2();
        let u = DisplacementField::from_fn(g, |_| [0.3, -1.2, 0.0]).unwrap();
        let e = symmetric_gradient(&u, &JumpSet::empty(g)).unwrap();
        assert!(e.values().iter().flatten().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_map_has_identity_strain() {
        let g = grid2();
        let u = DisplacementField::from_fn(g, |x| [x[0], x[1], 0.0]).unwrap();
        let e = symmetric_gradient(&u, &JumpSet::empty(g)).unwrap();
        for m in e.values() {
            assert!((m[0][0] - 1.0).abs() < 1e-13 && (m[1][1] - 1.0).abs() < 1e-13);
            assert!(m[0][1].abs() < 1e-13);
        }
    }

    #[test]
    fn cracked_face_switches_to_one_sided() {
        let g = grid2();
        let u = DisplacementField::from_fn(g, |x| [if x[0] > 0.0 { 1.0 } else { 0.0 }, 0.0, 0.0]).unwrap();
        let plane: Vec<Face> = (0..16).map(|j| Face { axis: 0, cell: g.index([7, j, 0]) }).collect();
        let cracked = JumpSet::from_faces(g, plane).unwrap();
        let e = symmetric_gradient(&u, &cracked).unwrap();
        assert!(e.values().iter().flatten().flatten().all(|v| *v == 0.0));
        let uncracked = symmetric_gradient(&u, &JumpSet::empty(g)).unwrap();
        assert!(uncracked.value(g.index([7, 3, 0]))[0][0] > 0.0);
    }

    #[test]
    fn mid_plane_measure() {
        let g = grid2();
        let plane: Vec<Face> = (0..16).map(|j| Face { axis: 0, cell: g.index([7, j, 0]) }).collect();
        let j = JumpSet::from_faces(g, plane).unwrap();
        assert!((j.measure() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_face_measure() {
        let g = GridSpec::unit(2, 8).unwrap();
        let j = JumpSet::from_faces(g, [Face { axis: 1, cell: 9 }]).unwrap();
        assert_eq!(j.measure(), 0.25);
        assert_eq!(JumpSet::empty(g).measure(), 0.0);
    }

    #[test]
    fn boundary_faces_rejected() {
        let g = grid2();
        let last = g.index([15, 0, 0]);
        assert!(JumpSet::from_faces(g, [Face { axis: 0, cell: last }]).is_err());
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let u = DisplacementField::zeros(grid2());
        let j = JumpSet::empty(GridSpec::unit(2, 32).unwrap());
        assert!(matches!(symmetric_gradient(&u, &j), Err(FieldError::GridMismatch)));
    }
}
