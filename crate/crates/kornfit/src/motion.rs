//! Rigid motions `x ↦ b + Wx` with `W` skew, and their least-squares fit.

use field_core::{norm3, DisplacementField, GridSpec, Mat3, Vec3};
use serde::{Deserialize, Serialize};

use crate::linalg::cholesky_solve;
use crate::KornError;

/// Axis pairs `(a, b)`, `a < b`, carrying the rotation parameters.
fn rotation_pairs(dim: usize) -> &'static [(usize, usize)] {
    match dim {
        2 => &[(0, 1)],
        _ => &[(0, 1), (0, 2), (1, 2)],
    }
}

/// Number of parameters of the rigid motions in `dim` dimensions.
pub fn rigid_dof(dim: usize) -> usize {
    dim * (dim - 1) / 2 + dim
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    pub dim: usize,
    pub w: Mat3,
    pub b: Vec3,
}

impl RigidMotion {
    pub fn zero(dim: usize) -> Self {
        Self { dim, w: [[0.0; 3]; 3], b: [0.0; 3] }
    }

    /// Builds the motion from `(b_0, .., b_{n−1}, θ_01, θ_02, θ_12)`; `W` is
    /// skew by construction.
    pub fn from_params(dim: usize, params: &[f64]) -> Self {
        let mut m = Self::zero(dim);
        m.b[..dim].copy_from_slice(&params[..dim]);
        for (k, &(a, b)) in rotation_pairs(dim).iter().enumerate() {
            m.w[a][b] = params[dim + k];
            m.w[b][a] = -params[dim + k];
        }
        m
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = self.b[..self.dim].to_vec();
        out.extend(rotation_pairs(self.dim).iter().map(|&(a, b)| self.w[a][b]));
        out
    }

    pub fn eval(&self, x: &Vec3) -> Vec3 {
        self.to_affine().eval(x)
    }

    /// `max |W + Wᵀ|`.
    pub fn skew_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                d = d.max((self.w[a][b] + self.w[b][a]).abs());
            }
        }
        d
    }

    pub fn to_affine(&self) -> AffineMap {
        AffineMap { dim: self.dim, a: self.w, b: self.b }
    }
}

/// General affine map `x ↦ b + Ax`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub dim: usize,
    pub a: Mat3,
    pub b: Vec3,
}

impl AffineMap {
    pub fn constant(dim: usize, c: Vec3) -> Self {
        Self { dim, a: [[0.0; 3]; 3], b: c }
    }

    pub fn eval(&self, x: &Vec3) -> Vec3 {
        let mut y = self.b;
        for (i, yi) in y.iter_mut().enumerate().take(self.dim) {
            for j in 0..self.dim {
                *yi += self.a[i][j] * x[j];
            }
        }
        y
    }

    pub fn sub(&self, other: &AffineMap) -> AffineMap {
        let mut out = *self;
        for i in 0..3 {
            out.b[i] -= other.b[i];
            for j in 0..3 {
                out.a[i][j] -= other.a[i][j];
            }
        }
        out
    }
}

/// Weighted least-squares rigid motion on `cells`. For `p = 2` this is the
/// exact normal-equation solution; otherwise reweighted least squares with
/// the full second-order weights `|r|^{p−2}(I + (p−2) r̂ r̂ᵀ)` and a
/// backtracking step, to relative tolerance `1e−10` in at most 50 rounds.
pub fn fit_rigid_motion(
    u: &DisplacementField,
    cells: &[usize],
    weights: Option<&[f64]>,
    p: f64,
) -> Result<RigidMotion, KornError> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(KornError::InvalidConfig(format!("exponent p = {p}")));
    }
    let base: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != cells.len() {
                return Err(KornError::InvalidConfig("weights and cells differ in length".into()));
            }
            w.to_vec()
        }
        None => vec![1.0; cells.len()],
    };
    let motion = weighted_fit(u, cells, &base)?;
    if p == 2.0 {
        return Ok(motion);
    }
    reweighted_fit(u, cells, &base, p, motion)
}

fn objective(u: &DisplacementField, cells: &[usize], base: &[f64], m: &RigidMotion, p: f64) -> f64 {
    let grid = u.grid();
    cells.iter().zip(base).map(|(&c, &w)| w * residual_norm(grid, u, m, c).powf(p)).sum()
}

fn reweighted_fit(
    u: &DisplacementField,
    cells: &[usize],
    base: &[f64],
    p: f64,
    start: RigidMotion,
) -> Result<RigidMotion, KornError> {
    let grid = u.grid();
    let dim = grid.dim;
    let n = rigid_dof(dim);
    let pairs = rotation_pairs(dim);
    let scale = cells.iter().map(|&c| norm3(u.value(c))).fold(0.0, f64::max).max(1.0);
    let floor = 1e-12 * scale;
    let mut motion = start;
    let mut value = objective(u, cells, base, &motion, p);
    for _ in 0..50 {
        let mut hess = vec![0.0; n * n];
        let mut grad = vec![0.0; n];
        let mut phi = vec![[0.0; 3]; n];
        for (&c, &w) in cells.iter().zip(base) {
            let x = grid.center(c);
            let a = motion.eval(&x);
            let v = u.value(c);
            let r = [v[0] - a[0], v[1] - a[1], v[2] - a[2]];
            let rn = norm3(&r).max(floor);
            let k = w * rn.powf(p - 2.0);
            for (i, f) in phi.iter_mut().enumerate().take(dim) {
                *f = [0.0; 3];
                f[i] = 1.0;
            }
            for (j, &(ia, ib)) in pairs.iter().enumerate() {
                let f = &mut phi[dim + j];
                *f = [0.0; 3];
                f[ia] = x[ib];
                f[ib] = -x[ia];
            }
            for i in 0..n {
                let ri: f64 = (0..dim).map(|d| r[d] * phi[i][d]).sum();
                grad[i] += k * ri;
                for j in 0..=i {
                    let rj: f64 = (0..dim).map(|d| r[d] * phi[j][d]).sum();
                    let pp: f64 = (0..dim).map(|d| phi[i][d] * phi[j][d]).sum();
                    hess[i * n + j] += k * (pp + (p - 2.0) * ri * rj / (rn * rn));
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                hess[i * n + j] = hess[j * n + i];
            }
        }
        let Some(step) = cholesky_solve(&hess, n, &grad, 1e-14) else { break };
        let params = motion.params();
        let size = params.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = params.iter().zip(&step).map(|(x, d)| x + t * d).collect();
            let cand = RigidMotion::from_params(dim, &trial);
            let v = objective(u, cells, base, &cand, p);
            if v <= value {
                motion = cand;
                value = v;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        let change = t * step.iter().map(|d| d.abs()).fold(0.0, f64::max);
        if !moved || change <= 1e-10 * size {
            break;
        }
    }
    Ok(motion)
}

fn residual_norm(grid: &GridSpec, u: &DisplacementField, m: &RigidMotion, c: usize) -> f64 {
    let a = m.eval(&grid.center(c));
    let v = u.value(c);
    norm3(&[v[0] - a[0], v[1] - a[1], v[2] - a[2]])
}

fn weighted_fit(u: &DisplacementField, cells: &[usize], weights: &[f64]) -> Result<RigidMotion, KornError> {
    let grid = u.grid();
    let dim = grid.dim;
    let pairs = rotation_pairs(dim);
    let n = rigid_dof(dim);
    let deficient = || KornError::RankDeficient { cells: cells.len() };

    let total: f64 = weights.iter().sum();
    if cells.is_empty() || total <= 0.0 {
        return Err(deficient());
    }
    let mut centroid = [0.0; 3];
    for (&c, &w) in cells.iter().zip(weights) {
        let x = grid.center(c);
        for a in 0..dim {
            centroid[a] += w * x[a];
        }
    }
    for x in centroid.iter_mut() {
        *x /= total;
    }

    // basis: e_a for translations, y ↦ (E_ab − E_ba) y for rotations
    let mut gram = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let mut phi = vec![[0.0; 3]; n];
    for (&c, &w) in cells.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let x = grid.center(c);
        let y = [x[0] - centroid[0], x[1] - centroid[1], x[2] - centroid[2]];
        for (a, f) in phi.iter_mut().enumerate().take(dim) {
            *f = [0.0; 3];
            f[a] = 1.0;
        }
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let f = &mut phi[dim + k];
            *f = [0.0; 3];
            f[a] = y[b];
            f[b] = -y[a];
        }
        let v = u.value(c);
        for i in 0..n {
            rhs[i] += w * (0..dim).map(|a| phi[i][a] * v[a]).sum::<f64>();
            for j in 0..=i {
                gram[i * n + j] += w * (0..dim).map(|a| phi[i][a] * phi[j][a]).sum::<f64>();
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            gram[i * n + j] = gram[j * n + i];
        }
    }
    let sol = cholesky_solve(&gram, n, &rhs, 1e-12).ok_or_else(deficient)?;
    let centred = RigidMotion::from_params(dim, &sol);
    // b + W(x − x̄) = (b − W x̄) + W x
    let mut motion = centred;
    for a in 0..dim {
        for c in 0..dim {
            motion.b[a] -= centred.w[a][c] * centroid[c];
        }
    }
    Ok(motion)
}

/// `Σ_{cells} |u − a|^p h^n`.
pub fn lp_residual(u: &DisplacementField, cells: &[usize], motion: &RigidMotion, p: f64) -> f64 {
    let grid = u.grid();
    cells.iter().map(|&c| residual_norm(grid, u, motion, c).powf(p)).sum::<f64>() * grid.cell_volume()
}
