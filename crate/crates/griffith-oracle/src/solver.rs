//! The quadratic (`p = 2`) Griffith energy for a fixed crack set and its
//! minimizer.
//!
//! The bulk and fidelity terms are sums of squared linear functionals of the
//! cell values: `λ/2 (tr e)²`, `μ e_ab²` over ordered index pairs and
//! `κ (u_a − t_a)²`, each weighted by the cell volume. The strain functionals
//! reuse the crack-aware difference stencils of `field_core`, so a cracked
//! face decouples the two cells it separates.

use field_core::{
    derivative_stencil, energy_g, energy_g0, AaBox, DisplacementField, EnergyBreakdown, EnergyParams, Face, GridSpec,
    JumpSet, Region, Vec3,
};
use serde::{Deserialize, Serialize};

use crate::search::CrackConfig;
use crate::OracleError;

/// Below this many unknowns the system is factored directly.
pub const DIRECT_LIMIT: usize = 4000;

/// Relative residual the iterative solve runs to.
pub const CG_TOLERANCE: f64 = 1e-12;

/// Largest accepted relative residual of the normal equations.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Functional {
    /// Fidelity towards `g`.
    G,
    /// Fidelity towards zero.
    G0,
}

/// Which cells a solve may move.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    /// Every cell moves; needs `κ > 0`.
    Free,
    /// The outermost layer of cells keeps the given values.
    Trace(DisplacementField),
    /// Cells compactly inside the box move, all others keep the given
    /// values, and the energy is counted on the box only.
    Inside { region: AaBox, field: DisplacementField },
}

/// A minimization problem up to the choice of crack configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub params: EnergyParams,
    pub functional: Functional,
    pub boundary: Boundary,
    /// Faces cracked in every configuration.
    pub base_jumps: JumpSet,
}

impl Problem {
    pub fn new(params: EnergyParams, functional: Functional, boundary: Boundary) -> Self {
        let base_jumps = JumpSet::empty(*params.g.grid());
        Self { params, functional, boundary, base_jumps }
    }

    pub fn grid(&self) -> &GridSpec {
        self.params.g.grid()
    }

    pub fn region(&self) -> Region {
        match &self.boundary {
            Boundary::Inside { region, .. } => Region::Box(*region),
            _ => Region::All,
        }
    }

    pub fn jumps_of(&self, config: &CrackConfig) -> Result<JumpSet, OracleError> {
        let mut jumps = self.base_jumps.clone();
        for f in config.active_faces() {
            jumps.insert(f)?;
        }
        Ok(jumps)
    }

    /// `G` or `G_0` of a field on the problem's region.
    pub fn energy(&self, u: &DisplacementField, jumps: &JumpSet) -> Result<EnergyBreakdown, OracleError> {
        let region = self.region();
        Ok(match self.functional {
            Functional::G => energy_g(u, jumps, &self.params, &region)?,
            Functional::G0 => energy_g0(u, jumps, &self.params, &region)?,
        })
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        self.params.validate()?;
        if self.params.p != 2.0 {
            return Err(OracleError::Exponent(self.params.p));
        }
        let grid = *self.grid();
        if self.base_jumps.grid() != &grid {
            return Err(field_core::FieldError::GridMismatch.into());
        }
        match &self.boundary {
            Boundary::Free if self.params.kappa == 0.0 => Err(OracleError::Singular),
            Boundary::Trace(f) | Boundary::Inside { field: f, .. } if f.grid() != &grid => {
                Err(field_core::FieldError::GridMismatch.into())
            }
            _ => Ok(()),
        }
    }

    fn target(&self, cell: usize) -> Vec3 {
        match self.functional {
            Functional::G => *self.params.g.value(cell),
            Functional::G0 => [0.0; 3],
        }
    }
}

/// Minimizer for one configuration.
#[derive(Debug, Clone)]
pub struct ElasticSolution {
    pub u: DisplacementField,
    pub jumps: JumpSet,
    /// Midpoint-rule energy of `u` from `field_core`.
    pub energy: EnergyBreakdown,
    /// Bulk plus fidelity from the assembled functionals.
    pub solver_energy: f64,
    /// Relative gap between `solver_energy` and the quadrature.
    pub consistency: f64,
    /// Relative residual of the normal equations.
    pub residual: f64,
    pub unknowns: usize,
}

fn movable(grid: &GridSpec, cell: usize, region: Option<&AaBox>) -> bool {
    let inside = |c: usize| region.map_or(true, |b| b.contains(&grid.center(c), grid.dim));
    if !inside(cell) {
        return false;
    }
    (0..grid.dim).all(|a| {
        [true, false].iter().all(|&fw| grid.neighbor(cell, a, fw).is_some_and(|n| inside(n)))
    })
}

/// `Σ coef · x[var]` minus `target`, weighted by `alpha`; `var = 3 cell + component`.
struct Term {
    alpha: f64,
    taps: Vec<(usize, f64)>,
    target: f64,
}

fn terms(problem: &Problem, jumps: &JumpSet, in_region: &[bool]) -> Vec<Term> {
    let grid = problem.grid();
    let dim = grid.dim;
    let vol = grid.cell_volume();
    let hooke = problem.params.hooke;
    let kappa = problem.params.kappa;
    let mut out = Vec::new();
    for c in 0..grid.num_cells() {
        if !in_region[c] {
            continue;
        }
        let st: Vec<_> = (0..dim).map(|b| derivative_stencil(grid, Some(jumps), c, b)).collect();
        // ∂_b u_a
        let d = |a: usize, b: usize, scale: f64, out: &mut Vec<(usize, f64)>| {
            for &(idx, w) in st[b].taps() {
                out.push((3 * idx + a, scale * w));
            }
        };
        if hooke.lame_lambda != 0.0 {
            let mut taps = Vec::new();
            for a in 0..dim {
                d(a, a, 1.0, &mut taps);
            }
            out.push(Term { alpha: 0.5 * vol * hooke.lame_lambda, taps, target: 0.0 });
        }
        for a in 0..dim {
            for b in 0..dim {
                let mut taps = Vec::new();
                d(a, b, 0.5, &mut taps);
                d(b, a, 0.5, &mut taps);
                out.push(Term { alpha: vol * hooke.lame_mu, taps, target: 0.0 });
            }
        }
        if kappa > 0.0 {
            let t = problem.target(c);
            for (a, &ta) in t.iter().enumerate().take(dim) {
                out.push(Term { alpha: kappa * vol, taps: vec![(3 * c + a, 1.0)], target: ta });
            }
        }
    }
    out
}

/// Symmetric matrix in compressed rows, full pattern.
struct Csr {
    n: usize,
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut start = vec![0; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = (usize::MAX, usize::MAX);
        for (i, j, v) in t {
            if (i, j) == last {
                *vals.last_mut().expect("entry") += v;
            } else {
                cols.push(j);
                vals.push(v);
                start[i + 1] = cols.len();
                last = (i, j);
            }
        }
        for i in 0..n {
            start[i + 1] = start[i + 1].max(start[i]);
        }
        Self { n, start, cols, vals }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.start[i]..self.start[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    fn max_diag(&self) -> f64 {
        (0..self.n).flat_map(|i| self.row(i).filter(move |&(j, _)| j == i).map(|(_, v)| v)).fold(0.0, f64::max)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cholesky factorization restricted to the band, then two triangular solves.
fn banded_solve(a: &Csr, rhs: &[f64]) -> Result<Vec<f64>, OracleError> {
    let n = a.n;
    let bw = a.bandwidth();
    let w = bw + 1;
    // l[i * w + (i − j)] = L_ij
    let mut l = vec![0.0; n * w];
    for i in 0..n {
        for (j, v) in a.row(i) {
            if j <= i {
                l[i * w + (i - j)] = v;
            }
        }
    }
    let floor = 1e-13 * a.max_diag();
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        for j in lo..=i {
            let k0 = lo.max(j.saturating_sub(bw));
            let mut s = l[i * w + (i - j)];
            for k in k0..j {
                s -= l[i * w + (i - k)] * l[j * w + (j - k)];
            }
            if i == j {
                if !(s > floor) {
                    return Err(OracleError::Singular);
                }
                l[i * w] = s.sqrt();
            } else {
                l[i * w + (i - j)] = s / l[j * w];
            }
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in i.saturating_sub(bw)..i {
            s -= l[i * w + (i - k)] * y[k];
        }
        y[i] = s / l[i * w];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..(i + w).min(n) {
            s -= l[k * w + (k - i)] * y[k];
        }
        y[i] = s / l[i * w];
    }
    Ok(y)
}

/// Jacobi-preconditioned conjugate gradients from zero.
fn cg_solve(a: &Csr, rhs: &[f64]) -> Result<Vec<f64>, OracleError> {
    let n = a.n;
    let diag: Vec<f64> = (0..n).map(|i| a.row(i).find(|&(j, _)| j == i).map_or(0.0, |(_, v)| v)).collect();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(OracleError::Singular);
    }
    let target = CG_TOLERANCE * norm(rhs);
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..20 * n.max(10) {
        if norm(&r) <= target {
            return Ok(x);
        }
        a.mul(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(OracleError::Singular);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(OracleError::NotConverged(norm(&r) / norm(rhs).max(f64::MIN_POSITIVE)))
}

/// Unique minimizer of bulk plus fidelity for the cracks of `config`.
pub fn solve_elastic(problem: &Problem, config: &CrackConfig) -> Result<ElasticSolution, OracleError> {
    problem.validate()?;
    let grid = *problem.grid();
    let dim = grid.dim;
    let jumps = problem.jumps_of(config)?;
    let (reference, box_region) = match &problem.boundary {
        Boundary::Free => (DisplacementField::zeros(grid), None),
        Boundary::Trace(f) => (f.clone(), None),
        Boundary::Inside { region, field } => (field.clone(), Some(*region)),
    };
    let free: Vec<bool> = (0..grid.num_cells())
        .map(|c| match problem.boundary {
            Boundary::Free => true,
            _ => movable(&grid, c, box_region.as_ref()),
        })
        .collect();
    let in_region = problem.region().cell_mask(&grid);

    let mut var = vec![usize::MAX; 3 * grid.num_cells()];
    let mut n = 0;
    for c in (0..grid.num_cells()).filter(|&c| free[c]) {
        for a in 0..dim {
            var[3 * c + a] = n;
            n += 1;
        }
    }
    let mut x_ref: Vec<f64> = reference.values().iter().flatten().copied().collect();

    let terms = terms(problem, &jumps, &in_region);
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n];
    let mut local = Vec::new();
    for t in &terms {
        local.clear();
        let mut c0 = -t.target;
        for &(v, coef) in &t.taps {
            match var[v] {
                usize::MAX => c0 += coef * x_ref[v],
                k => local.push((k, coef)),
            }
        }
        for &(k, ck) in &local {
            rhs[k] -= t.alpha * c0 * ck;
            for &(l, cl) in &local {
                triplets.push((k, l, t.alpha * ck * cl));
            }
        }
    }
    let a = Csr::from_triplets(n, triplets);
    let x = if n == 0 {
        Vec::new()
    } else if n < DIRECT_LIMIT {
        banded_solve(&a, &rhs)?
    } else {
        cg_solve(&a, &rhs)?
    };
    let mut ax = vec![0.0; n];
    a.mul(&x, &mut ax);
    let res: Vec<f64> = ax.iter().zip(&rhs).map(|(p, q)| p - q).collect();
    let scale = norm(&rhs).max(norm(&ax));
    let residual = if scale > 0.0 { norm(&res) / scale } else { 0.0 };
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(OracleError::NotConverged(residual));
    }

    for c in (0..grid.num_cells()).filter(|&c| free[c]) {
        for a in 0..dim {
            x_ref[3 * c + a] = x[var[3 * c + a]];
        }
        // the out-of-plane component only carries fidelity
        if dim == 2 && problem.params.kappa > 0.0 && in_region[c] {
            x_ref[3 * c + 2] = problem.target(c)[2];
        }
    }
    let solver_energy: f64 = terms
        .iter()
        .map(|t| {
            let v: f64 = t.taps.iter().map(|&(k, coef)| coef * x_ref[k]).sum::<f64>() - t.target;
            t.alpha * v * v
        })
        .sum::<f64>()
        + out_of_plane(problem, &x_ref, &in_region);
    let values: Vec<Vec3> = x_ref.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let u = DisplacementField::new(grid, values)?;
    let energy = problem.energy(&u, &jumps)?;
    let quad = energy.bulk + energy.fidelity;
    let consistency = (solver_energy - quad).abs() / quad.abs().max(1e-12);
    Ok(ElasticSolution { u, jumps, energy, solver_energy, consistency, residual, unknowns: n })
}

/// Fidelity of the third component in 2D, which no strain term sees.
fn out_of_plane(problem: &Problem, x: &[f64], in_region: &[bool]) -> f64 {
    let grid = problem.grid();
    if grid.dim != 2 || problem.params.kappa == 0.0 {
        return 0.0;
    }
    let s: f64 = (0..grid.num_cells())
        .filter(|&c| in_region[c])
        .map(|c| (x[3 * c + 2] - problem.target(c)[2]).powi(2))
        .sum();
    problem.params.kappa * grid.cell_volume() * s
}

/// Interior faces whose centre lies in the box, in grid order.
pub fn faces_in(grid: &GridSpec, region: &AaBox) -> Vec<Face> {
    let r = Region::Box(*region);
    grid.interior_faces().filter(|&f| r.contains_face(grid, f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_and_iterative_solves_agree() {
        // 1D Laplacian plus identity
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = Csr::from_triplets(n, t);
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let x = banded_solve(&a, &rhs).unwrap();
        let y = cg_solve(&a, &rhs).unwrap();
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-11));
        let mut ax = vec![0.0; n];
        a.mul(&x, &mut ax);
        assert!(ax.iter().zip(&rhs).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn zero_pivot_is_singular() {
        let a = Csr::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(banded_solve(&a, &[1.0, 1.0]), Err(OracleError::Singular)));
    }
}
