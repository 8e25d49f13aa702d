//! Exceptional set of a cube by residual trimming with refits.
//!
//! Cells of `q″` whose distance to the current rigid fit exceeds a cut
//! level are removed and the motion is refitted. The level halves each
//! round until it reaches a Korn–Poincaré scale threshold, after which
//! the loop runs until the set is stable. The set may hold at most
//! `c_* δ_q H^{n−1}(J ∩ q‴) / h^n` cells; when more cells exceed the
//! threshold only the worst ones are taken and the cube is flagged.

use covering::{DyadicCube, Enlargement};
use field_core::{norm3, DisplacementField, Face, JumpSet, StrainField};
use serde::{Deserialize, Serialize};

use crate::motion::{fit_rigid_motion, lp_residual, RigidMotion};
use crate::{sobolev_exponent, KornError};

/// Budget constant `c_*`: the 99th percentile of the realized
/// `|ω| / (δ_q H^{n−1}(J ∩ q‴))` over the calibration suite in `tests/calibration.rs`.
pub const DEFAULT_C_STAR: f64 = 0.0625;

/// Frozen bound on [`FitConstants::sobolev_ratio`] for good cubes fitted with
/// [`DEFAULT_C_STAR`]: twice the largest realized value over the same suite,
/// rounded up to a power of two.
pub const SOBOLEV_LIMIT: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub p: f64,
    pub c_star: f64,
    /// Threshold in units of `δ_q (⨍_{q‴}|e(u)|^p)^{1/p}`.
    pub tau_rel: f64,
    /// Absolute threshold floor relative to `max(1, max_{q″}|u|)`.
    pub tau_abs: f64,
    pub max_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { p: 2.0, c_star: DEFAULT_C_STAR, tau_rel: 3.0, tau_abs: 1e-9, max_iter: 100 }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), KornError> {
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(KornError::InvalidConfig(format!("p = {} must exceed 1", self.p)));
        }
        if !(self.c_star >= 0.0 && self.tau_rel >= 0.0 && self.tau_abs >= 0.0) {
            return Err(KornError::InvalidConfig("negative trimming constant".into()));
        }
        Ok(())
    }
}

/// Cells of `q″` excluded from the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalSet {
    pub cube: DyadicCube,
    /// Sorted cell indices.
    pub cells: Vec<usize>,
    pub volume: f64,
}

impl ExceptionalSet {
    pub fn contains(&self, cell: usize) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Realized constants of the cube estimates; zero when both sides vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConstants {
    /// `|ω| / (δ_q H^{n−1}(J ∩ q‴))`.
    pub omega_ratio: f64,
    /// `∫_{q″∖ω}|u−a|^{np/(n−1)} / (δ_q^{n(p−1)/(n−1)} (∫_{q‴}|e(u)|^p)^{n/(n−1)})`.
    pub sobolev_ratio: f64,
    /// `∫_{q″∖ω}|u−a|^p / (δ_q^p ∫_{q‴}|e(u)|^p)`.
    pub lp_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub motion: RigidMotion,
    pub omega: ExceptionalSet,
    pub residual_lp: f64,
    pub residual_sobolev: f64,
    pub jump_measure: f64,
    pub strain_lp: f64,
    pub threshold: f64,
    pub budget_cells: usize,
    pub iterations: usize,
    /// More cells exceeded the threshold than the budget admits.
    pub budget_bound: bool,
    pub contract_violated: bool,
    pub constants: FitConstants,
}

pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    const TINY: f64 = 1e-24;
    if num <= TINY {
        0.0
    } else if den <= TINY {
        f64::INFINITY
    } else {
        num / den
    }
}

/// `H^{n−1}(J ∩ q‴)` by scanning the faces of the cells of `q‴`.
pub fn jump_measure_in(jumps: &JumpSet, cube: &DyadicCube, e: Enlargement) -> f64 {
    let grid = jumps.grid();
    let mut count = 0usize;
    for c in cube.cells(grid, e) {
        for axis in 0..grid.dim {
            let f = Face { axis, cell: c };
            if jumps.contains(f) && cube.contains_face(grid, f, e) {
                count += 1;
            }
        }
    }
    count as f64 * grid.face_area()
}

fn residuals(u: &DisplacementField, cells: &[usize], motion: &RigidMotion) -> Vec<f64> {
    let grid = u.grid();
    cells
        .iter()
        .map(|&c| {
            let a = motion.eval(&grid.center(c));
            let v = u.value(c);
            norm3(&[v[0] - a[0], v[1] - a[1], v[2] - a[2]])
        })
        .collect()
}

/// The rigid fit, or the best translation where the cells do not determine
/// a rotation (a single cell, say).
fn fit_or_translate(u: &DisplacementField, cells: &[usize], p: f64) -> Result<RigidMotion, KornError> {
    match fit_rigid_motion(u, cells, None, p) {
        Err(KornError::RankDeficient { .. }) if !cells.is_empty() => {
            let mut m = RigidMotion::zero(u.grid().dim);
            for &c in cells {
                for a in 0..3 {
                    m.b[a] += u.value(c)[a] / cells.len() as f64;
                }
            }
            Ok(m)
        }
        other => other,
    }
}

fn complement(cells: &[usize], omega: &[usize]) -> Vec<usize> {
    cells.iter().copied().filter(|c| omega.binary_search(c).is_err()).collect()
}

/// Fits the rigid motion of a good cube and trims its exceptional set.
pub fn extract_exceptional_set(
    u: &DisplacementField,
    jumps: &JumpSet,
    strain: &StrainField,
    cube: &DyadicCube,
    config: &FitConfig,
) -> Result<FitReport, KornError> {
    config.validate()?;
    let grid = *u.grid();
    if jumps.grid() != &grid || strain.grid() != &grid {
        return Err(field_core::FieldError::GridMismatch.into());
    }
    let dim = grid.dim;
    let p = config.p;
    let vol = grid.cell_volume();
    let delta = cube.side_length(&grid);
    let q2 = cube.cells(&grid, Enlargement::Double);
    let q3 = cube.cells(&grid, Enlargement::Triple);

    let jump = jump_measure_in(jumps, cube, Enlargement::Triple);
    let strain_lp: f64 = q3.iter().map(|&c| field_core::frobenius(strain.value(c)).powf(p)).sum::<f64>() * vol;
    let mean_strain = (strain_lp / (q3.len() as f64 * vol)).powf(1.0 / p);
    let u_scale = q2.iter().map(|&c| norm3(u.value(c))).fold(1.0, f64::max);
    let threshold = config.tau_rel * delta * mean_strain + config.tau_abs * u_scale;
    let budget = if jump > 0.0 { (config.c_star * delta * jump / vol + 1e-9).floor() as usize } else { 0 };

    let mut omega: Vec<usize> = Vec::new();
    let mut motion = fit_or_translate(u, &q2, p)?;
    let mut bound = false;
    let mut iterations = 0;
    if jump > 0.0 {
        // cut level halves from the largest initial residual down to the threshold
        let mut level = residuals(u, &q2, &motion).into_iter().fold(0.0, f64::max);
        for it in 0..config.max_iter {
            iterations = it + 1;
            level = (0.5 * level).max(threshold);
            let r = residuals(u, &q2, &motion);
            let mut above: Vec<(f64, usize)> =
                q2.iter().zip(&r).filter(|(_, &x)| x > level).map(|(&c, &x)| (x, c)).collect();
            above.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            bound = above.len() > budget;
            above.truncate(budget);
            let mut next: Vec<usize> = above.into_iter().map(|(_, c)| c).collect();
            next.sort_unstable();
            if next == omega && level <= threshold {
                break;
            }
            if next != omega {
                omega = next;
                motion = fit_or_translate(u, &complement(&q2, &omega), p)?;
            }
        }
    }

    let kept = complement(&q2, &omega);
    let residual_lp = lp_residual(u, &kept, &motion, p);
    let s = sobolev_exponent(dim, p);
    let residual_sobolev = lp_residual(u, &kept, &motion, s);
    let omega_volume = omega.len() as f64 * vol;
    let cube_volume = cube.volume_cells(dim) as f64 * vol;
    let small = omega_volume <= 0.5 * 8f64.powi(-(dim as i32)) * cube_volume * (1.0 + 1e-12);
    let n = dim as f64;
    let constants = FitConstants {
        omega_ratio: ratio(omega_volume, delta * jump),
        sobolev_ratio: ratio(residual_sobolev, delta.powf(n * (p - 1.0) / (n - 1.0)) * strain_lp.powf(n / (n - 1.0))),
        lp_ratio: ratio(residual_lp, delta.powf(p) * strain_lp),
    };
    Ok(FitReport {
        motion,
        omega: ExceptionalSet { cube: *cube, cells: omega, volume: omega_volume },
        residual_lp,
        residual_sobolev,
        jump_measure: jump,
        strain_lp,
        threshold,
        budget_cells: budget,
        iterations,
        budget_bound: bound,
        contract_violated: bound || !small,
        constants,
    })
}

/// Brute-force reference for the trimming: cells ranked by their residual
/// to the untrimmed fit, refitted without each prefix of the ranking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixOracle {
    /// `∫_{cells ∖ top-k}|u − a_k|^p` for `k = 0..=budget`.
    pub objectives: Vec<f64>,
    pub best_k: usize,
    pub best: f64,
    /// Smallest `k` whose objective is within `1e−9 · objectives[0]` of the best.
    pub knee_k: usize,
    /// The `knee_k` removed cells, sorted.
    pub omega: Vec<usize>,
}

pub fn prefix_oracle(u: &DisplacementField, cells: &[usize], budget: usize, p: f64) -> Result<PrefixOracle, KornError> {
    let full = fit_rigid_motion(u, cells, None, p)?;
    let r = residuals(u, cells, &full);
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(cells[a].cmp(&cells[b])));
    let mut objectives = Vec::with_capacity(budget + 1);
    for k in 0..=budget.min(cells.len()) {
        let mut removed: Vec<usize> = order[..k].iter().map(|&i| cells[i]).collect();
        removed.sort_unstable();
        let kept = complement(cells, &removed);
        let value = match fit_rigid_motion(u, &kept, None, p) {
            Ok(m) => lp_residual(u, &kept, &m, p),
            Err(KornError::RankDeficient { .. }) => break,
            Err(e) => return Err(e),
        };
        objectives.push(value);
    }
    let (best_k, best) =
        objectives.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    let slack = 1e-9 * objectives.first().copied().unwrap_or(0.0);
    let knee_k = objectives.iter().position(|&v| v <= best + slack).unwrap_or(0);
    let mut omega: Vec<usize> = order[..knee_k].iter().map(|&i| cells[i]).collect();
    omega.sort_unstable();
    Ok(PrefixOracle { objectives, best_k, best, knee_k, omega })
}
