//! Strain error of the mollified, patched field `u_q = ρ_{δ_q} * (u χ_{q″∖ω} + a χ_ω)`.

use covering::{DyadicCube, Enlargement};
use field_core::{frobenius, Blendable, DisplacementField, GridSpec, Mat3, Mollifier, StrainField, Vec3};
use serde::{Deserialize, Serialize};

use crate::trim::{ratio, FitReport};
use crate::KornError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifiedError {
    /// `∫_{q′}|e(u_q) − e(u)*ρ|^p` over the cells where the difference stencil stays in `q′`.
    pub error: f64,
    pub strain_lp: f64,
    /// `H^{n−1}(J ∩ q‴) / δ_q^{n−1}`.
    pub jump_ratio: f64,
    /// `error / ∫_{q‴}|e(u)|^p`.
    pub ratio: f64,
    pub cells: usize,
}

/// Dense storage over a box of cells.
pub(crate) struct LocalBox<T> {
    pub lo: [usize; 3],
    pub ext: [usize; 3],
    pub data: Vec<Option<T>>,
}

impl<T: Copy> LocalBox<T> {
    pub fn new(ranges: [(usize, usize); 3]) -> Self {
        let lo = [ranges[0].0, ranges[1].0, ranges[2].0];
        let ext = [ranges[0].1 - lo[0], ranges[1].1 - lo[1], ranges[2].1 - lo[2]];
        Self { lo, ext, data: vec![None; ext[0] * ext[1] * ext[2]] }
    }

    fn slot(&self, grid: &GridSpec, cell: usize) -> Option<usize> {
        let c = grid.coords(cell);
        let mut k = 0;
        for a in 0..3 {
            let d = c[a].checked_sub(self.lo[a])?;
            if d >= self.ext[a] {
                return None;
            }
            k = k * self.ext[a] + d;
        }
        Some(k)
    }

    pub fn get(&self, grid: &GridSpec, cell: usize) -> Option<T> {
        self.slot(grid, cell).and_then(|k| self.data[k])
    }

    pub fn set(&mut self, grid: &GridSpec, cell: usize, v: T) {
        if let Some(k) = self.slot(grid, cell) {
            self.data[k] = Some(v);
        }
    }
}

/// `ρ * f` on `targets`, reading `f` from `source`.
fn convolve<T: Blendable>(
    grid: &GridSpec,
    kernel: &field_core::Kernel,
    source: &LocalBox<T>,
    targets: &[usize],
    ranges: [(usize, usize); 3],
) -> LocalBox<T> {
    let mut out = LocalBox::new(ranges);
    for &c in targets {
        if let Some(v) = kernel.apply_with(grid, c, |i| source.get(grid, i)) {
            out.set(grid, c, v);
        }
    }
    out
}

/// `u χ_{q″∖ω} + a χ_ω` on `q″`.
fn patched(u: &DisplacementField, cube: &DyadicCube, fit: &FitReport) -> LocalBox<Vec3> {
    let grid = *u.grid();
    let mut v = LocalBox::new(cube.ranges(&grid, Enlargement::Double));
    for c in cube.cells(&grid, Enlargement::Double) {
        let val = if fit.omega.contains(c) { fit.motion.eval(&grid.center(c)) } else { *u.value(c) };
        v.set(&grid, c, val);
    }
    v
}

/// `u_q = ρ_{δ_q} * (u χ_{q″∖ω} + a χ_ω)` at the cells of `q′`, in cell order.
/// A cell whose stencil leaves `q″` (only possible at the grid boundary) keeps
/// the patched value.
pub fn patched_mollification(u: &DisplacementField, cube: &DyadicCube, fit: &FitReport, rho: &Mollifier) -> Vec<(usize, Vec3)> {
    let grid = *u.grid();
    let kernel = rho.kernel_unchecked(&grid, 0.5 * cube.side_length(&grid));
    let v = patched(u, cube, fit);
    cube.cells(&grid, Enlargement::Prime)
        .into_iter()
        .map(|c| {
            let val = kernel.apply_with(&grid, c, |i| v.get(&grid, i)).or_else(|| v.get(&grid, c)).unwrap_or(*u.value(c));
            (c, val)
        })
        .collect()
}

pub fn mollified_strain_error(
    u: &DisplacementField,
    strain: &StrainField,
    cube: &DyadicCube,
    fit: &FitReport,
    rho: &Mollifier,
    p: f64,
) -> Result<MollifiedError, KornError> {
    let grid = *u.grid();
    if strain.grid() != &grid {
        return Err(field_core::FieldError::GridMismatch.into());
    }
    let dim = grid.dim;
    let vol = grid.cell_volume();
    let delta = cube.side_length(&grid);
    let kernel = rho.kernel_unchecked(&grid, 0.5 * delta);

    let r2 = cube.ranges(&grid, Enlargement::Double);
    let v = patched(u, cube, fit);
    let mut e: LocalBox<Mat3> = LocalBox::new(r2);
    for c in cube.cells(&grid, Enlargement::Double) {
        e.set(&grid, c, *strain.value(c));
    }
    let r1 = cube.ranges(&grid, Enlargement::Prime);
    let q1 = cube.cells(&grid, Enlargement::Prime);
    let w = convolve(&grid, &kernel, &v, &q1, r1);
    let e_rho = convolve(&grid, &kernel, &e, &q1, r1);

    let h = grid.h();
    let mut error = 0.0;
    let mut cells = 0;
    'cells: for &c in &q1 {
        let mut grad = [[0.0; 3]; 3];
        for b in 0..dim {
            let (Some(fw), Some(bw)) = (grid.neighbor(c, b, true), grid.neighbor(c, b, false)) else {
                continue 'cells;
            };
            let (Some(wf), Some(wb)) = (w.get(&grid, fw), w.get(&grid, bw)) else {
                continue 'cells;
            };
            for a in 0..dim {
                grad[a][b] = (wf[a] - wb[a]) / (2.0 * h);
            }
        }
        let sym = field_core::symmetrize(&grad);
        let Some(target) = e_rho.get(&grid, c) else { continue };
        let mut diff = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                diff[a][b] = sym[a][b] - target[a][b];
            }
        }
        error += frobenius(&diff).powf(p) * vol;
        cells += 1;
    }
    let strain_lp = fit.strain_lp;
    Ok(MollifiedError {
        error,
        strain_lp,
        jump_ratio: fit.jump_measure / delta.powi(dim as i32 - 1),
        ratio: ratio(error, strain_lp),
        cells,
    })
}

/// Least-squares slope of `log ratio` against `log jump_ratio`, i.e. the
/// empirical exponent `p̄` in `ratio ≈ c · jump_ratio^{p̄}`. Pairs with a
/// non-positive coordinate are skipped.
pub fn decay_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|t| t.0).sum::<f64>() / n;
    let my = logs.iter().map(|t| t.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|t| (t.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|t| (t.0 - mx) * (t.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
