//! Synthetic displacement fields with prescribed crack sets.

use rand::Rng;

use crate::field::{DisplacementField, JumpSet};
use crate::grid::{Face, GridSpec, Mat3, Vec3};
use crate::FieldError;

/// Skew matrix with entries uniform in `[-scale, scale]`.
pub fn random_skew<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Mat3 {
    let mut w = [[0.0; 3]; 3];
    for a in 0..dim {
        for b in (a + 1)..dim {
            let v = rng.gen_range(-scale..=scale);
            w[a][b] = v;
            w[b][a] = -v;
        }
    }
    w
}

pub fn random_vector<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Vec3 {
    let mut b = [0.0; 3];
    for v in b.iter_mut().take(dim) {
        *v = rng.gen_range(-scale..=scale);
    }
    b
}

/// `x ↦ b + Wx`.
pub fn affine_eval(w: &Mat3, b: &Vec3, x: &Vec3) -> Vec3 {
    let mut out = *b;
    for a in 0..3 {
        for c in 0..3 {
            out[a] += w[a][c] * x[c];
        }
    }
    out
}

pub fn rigid_field(grid: GridSpec, w: &Mat3, b: &Vec3) -> DisplacementField {
    DisplacementField::from_fn(grid, |x| affine_eval(w, b, x)).expect("finite rigid motion")
}

/// Smooth field `u_a(x) = amp Σ_b c_ab sin(π k x_b + φ_ab)` with fixed pseudo-random coefficients.
pub fn smooth_sinusoid<R: Rng>(grid: GridSpec, amplitude: f64, wave: f64, rng: &mut R) -> DisplacementField {
    let dim = grid.dim;
    let mut coef = [[0.0; 3]; 3];
    let mut phase = [[0.0; 3]; 3];
    for a in 0..dim {
        for b in 0..dim {
            coef[a][b] = rng.gen_range(-1.0..=1.0);
            phase[a][b] = rng.gen_range(0.0..std::f64::consts::TAU);
        }
    }
    let k = std::f64::consts::PI * wave / grid.half_width;
    DisplacementField::from_fn(grid, |x| {
        let mut v = [0.0; 3];
        for a in 0..dim {
            for b in 0..dim {
                v[a] += amplitude * coef[a][b] * (k * x[b] + phase[a][b]).sin();
            }
        }
        v
    })
    .expect("finite sinusoid")
}

/// Planar crack on the faces between cell layers `plane` and `plane + 1` along `axis`,
/// spanning cells `lo[t]..hi[t]` in every tangential direction `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarCrack {
    pub axis: usize,
    pub plane: usize,
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    pub opening: Vec3,
}

impl PlanarCrack {
    pub fn faces(&self, grid: &GridSpec) -> Vec<Face> {
        let mut out = Vec::new();
        let dim = grid.dim;
        let range = |a: usize| if a == self.axis || a >= dim { 0..1 } else { self.lo[a]..self.hi[a] };
        for i in range(0) {
            for j in range(1) {
                for k in range(2) {
                    let mut c = [i, j, k];
                    c[self.axis] = self.plane;
                    out.push(Face { axis: self.axis, cell: grid.index(c) });
                }
            }
        }
        out
    }

    pub fn face_count(&self, dim: usize) -> usize {
        (0..dim).filter(|&a| a != self.axis).map(|a| self.hi[a] - self.lo[a]).product()
    }

    /// Plateau weight that is positive on the cells touching the crack and
    /// vanishes on every cell not separated by it, so the opening field is
    /// continuous away from the crack.
    pub fn profile(&self, grid: &GridSpec, x: &Vec3) -> f64 {
        let h = grid.h();
        let r = grid.half_width;
        let mut theta = 1.0;
        let mut reach = 0.0f64;
        for t in 0..grid.dim {
            if t == self.axis {
                continue;
            }
            let a = -r + self.lo[t] as f64 * h;
            let b = -r + self.hi[t] as f64 * h;
            let c = 0.5 * (a + b);
            let half = 0.5 * (b - a) + 0.5 * h;
            reach = reach.max(half);
            let s = ((x[t] - c).abs() / half).min(1.0);
            theta *= (1.0 - s * s).powi(2);
        }
        let x0 = -r + (self.plane + 1) as f64 * h;
        let s = ((x[self.axis] - x0).abs() / (reach + h)).min(1.0);
        theta * (1.0 - s * s).powi(2)
    }

    /// Opening displacement: `±θ(x)·opening/2` on the two sides of the plane.
    pub fn opening_at(&self, grid: &GridSpec, idx: usize) -> Vec3 {
        let x = grid.center(idx);
        let side = if grid.coords(idx)[self.axis] > self.plane { 0.5 } else { -0.5 };
        let th = self.profile(grid, &x) * side;
        [th * self.opening[0], th * self.opening[1], th * self.opening[2]]
    }
}

/// A field together with its crack set.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub u: DisplacementField,
    pub jumps: JumpSet,
}

/// Adds the opening fields of `cracks` to `base` and collects their faces.
pub fn with_cracks(base: &DisplacementField, cracks: &[PlanarCrack]) -> Result<Synthetic, FieldError> {
    let grid = *base.grid();
    let mut values = base.values().to_vec();
    let mut jumps = JumpSet::empty(grid);
    for crack in cracks {
        for f in crack.faces(&grid) {
            jumps.insert(f)?;
        }
        for (i, v) in values.iter_mut().enumerate() {
            let o = crack.opening_at(&grid, i);
            for a in 0..3 {
                v[a] += o[a];
            }
        }
    }
    Ok(Synthetic { u: DisplacementField::new(grid, values)?, jumps })
}

/// Tangential extents `(n_1, ..., n_{dim-1})` whose product is within one of `faces`.
fn patch_shape(faces: usize, dim: usize) -> Vec<usize> {
    if dim == 2 {
        return vec![faces];
    }
    let mut best = (faces.max(1), 1usize);
    let mut best_key = (usize::MAX, 0usize);
    for a in 1..=((faces as f64).sqrt().ceil() as usize + 1) {
        let b = ((faces as f64) / a as f64).round().max(1.0) as usize;
        let key = ((a * b).abs_diff(faces), usize::MAX - a.min(b));
        if key < best_key {
            best_key = key;
            best = (a, b);
        }
    }
    vec![best.0, best.1]
}

/// Centred planar crack with about `area / h^{dim-1}` faces, perpendicular to axis 0.
pub fn centered_crack(grid: &GridSpec, faces: usize, opening: Vec3) -> PlanarCrack {
    let m = grid.cells_per_side;
    let shape = patch_shape(faces, grid.dim);
    let mut lo = [0; 3];
    let mut hi = [0; 3];
    for (k, t) in (1..grid.dim).enumerate() {
        lo[t] = (m - shape[k]) / 2;
        hi[t] = lo[t] + shape[k];
    }
    PlanarCrack { axis: 0, plane: m / 2 - 1, lo, hi, opening }
}

/// Two rigid motions separated by a small centred crack of measure close to `area`:
/// the positive side near the crack follows `second`, everything else `first`.
pub fn two_motion_crack(
    grid: GridSpec,
    area: f64,
    first: (&Mat3, &Vec3),
    second: (&Mat3, &Vec3),
) -> Result<Synthetic, FieldError> {
    let faces = (area / grid.face_area()).round() as usize;
    let crack = centered_crack(&grid, faces, [0.0; 3]);
    let base = rigid_field(grid, first.0, first.1);
    let mut values = base.values().to_vec();
    let mut jumps = JumpSet::empty(grid);
    if faces > 0 {
        for f in crack.faces(&grid) {
            jumps.insert(f)?;
        }
        for (i, v) in values.iter_mut().enumerate() {
            if grid.coords(i)[crack.axis] <= crack.plane {
                continue;
            }
            let x = grid.center(i);
            let th = crack.profile(&grid, &x);
            let a1 = affine_eval(first.0, first.1, &x);
            let a2 = affine_eval(second.0, second.1, &x);
            for a in 0..3 {
                v[a] += th * (a2[a] - a1[a]);
            }
        }
    }
    Ok(Synthetic { u: DisplacementField::new(grid, values)?, jumps })
}

/// Random planar cracks inside `Q_{0.8}`, each with at most `max_size` faces per tangential direction.
pub fn random_cracks<R: Rng>(
    grid: &GridSpec,
    count: usize,
    max_size: usize,
    opening_scale: f64,
    rng: &mut R,
) -> Vec<PlanarCrack> {
    let m = grid.cells_per_side;
    let margin = m / 10 + max_size + 1;
    (0..count)
        .map(|_| {
            let axis = rng.gen_range(0..grid.dim);
            let plane = rng.gen_range(margin..(m - margin));
            let mut lo = [0; 3];
            let mut hi = [0; 3];
            for t in 0..grid.dim {
                if t == axis {
                    continue;
                }
                let size = rng.gen_range(1..=max_size);
                lo[t] = rng.gen_range(margin..(m - margin - size));
                hi[t] = lo[t] + size;
            }
            PlanarCrack { axis, plane, lo, hi, opening: random_vector(rng, grid.dim, opening_scale) }
        })
        .collect()
}

/// Axis-aligned box of cells `lo..hi` whose values are shifted by a rigid motion.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidPatch {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
    pub w: Mat3,
    pub b: Vec3,
}

impl RigidPatch {
    pub fn contains(&self, grid: &GridSpec, idx: usize) -> bool {
        let c = grid.coords(idx);
        (0..grid.dim).all(|a| c[a] >= self.lo[a] && c[a] < self.hi[a])
    }
}

/// Adds rigid patches to `base`; the crack set is the boundary of every patch.
pub fn with_patches(base: &DisplacementField, patches: &[RigidPatch]) -> Result<Synthetic, FieldError> {
    let grid = *base.grid();
    let mut values = base.values().to_vec();
    let mut inside = vec![usize::MAX; grid.num_cells()];
    for (k, patch) in patches.iter().enumerate() {
        for (i, v) in values.iter_mut().enumerate() {
            if patch.contains(&grid, i) {
                inside[i] = k;
                let d = affine_eval(&patch.w, &patch.b, &grid.center(i));
                for a in 0..3 {
                    v[a] += d[a];
                }
            }
        }
    }
    let mut jumps = JumpSet::empty(grid);
    for f in grid.interior_faces() {
        let (c0, c1) = grid.face_cells(f);
        if inside[c0] != inside[c1] {
            jumps.insert(f)?;
        }
    }
    Ok(Synthetic { u: DisplacementField::new(grid, values)?, jumps })
}
