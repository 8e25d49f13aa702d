//! Choice of the crown index `i₀`.
//!
//! `Q^i` is the centred cube of half-width `(N − i)δ` with `N = ⌊1/δ⌋`, and
//! `C^i = Q^i \ Q^{i+1}`. The crown pair `C^i ∪ C^{i+1}` must carry at most
//! `8√δ` times the strain energy, jump measure and (optionally) `L^p` mass of
//! the outer band `Q \ Q_{1−√δ}`.

use field_core::{symmetric_gradient, AaBox, DisplacementField, Face, GridSpec, JumpSet, Region};
use serde::{Deserialize, Serialize};

use crate::CoveringError;

/// Lattice-aligned covering scale in cells: `δ` rounded up to a multiple of
/// `min_side · h`. Below `2 · min_side · h` the crown has no slab.
pub fn align_delta(grid: &GridSpec, delta: f64, min_side: usize) -> Result<usize, CoveringError> {
    let h = grid.h();
    if !(delta.is_finite() && delta > 0.0) {
        return Err(CoveringError::InvalidDelta(delta));
    }
    if delta < min_side as f64 * h * (1.0 - 1e-9) {
        return Err(CoveringError::GridTooCoarse { delta, h, min_side });
    }
    let units = (delta / (min_side as f64 * h) - 1e-9).ceil() as usize;
    Ok(units * min_side)
}

/// Budgets of one candidate index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrownCandidate {
    pub index: usize,
    pub strain: f64,
    pub jump: f64,
    pub lp: Option<f64>,
    pub boundary_clear: bool,
    pub admissible: bool,
    pub score: f64,
}

/// Outer-band totals the crown budgets are compared with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrownTotals {
    pub strain: f64,
    pub jump: f64,
    pub lp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrownSelection {
    pub i0: usize,
    pub delta: f64,
    pub delta_cells: usize,
    pub min_side: usize,
    pub n_outer: usize,
    pub bound_factor: f64,
    pub totals: CrownTotals,
    pub candidates: Vec<CrownCandidate>,
}

impl CrownSelection {
    /// A selection with a prescribed index and no budget bookkeeping, for
    /// building coverings outside the admissible crown range.
    pub fn fixed(grid: &GridSpec, delta: f64, i0: usize, min_side: usize) -> Result<Self, CoveringError> {
        let m = align_delta(grid, delta, min_side)?;
        let n_outer = grid.cells_per_side / 2 / m;
        if i0 == 0 || i0 + 2 > n_outer {
            return Err(CoveringError::CrownInfeasible(format!("index {i0} needs 1 ≤ i0 ≤ N − 2 with N = {n_outer}")));
        }
        let totals = CrownTotals { strain: 0.0, jump: 0.0, lp: None };
        let cand = CrownCandidate {
            index: i0,
            strain: 0.0,
            jump: 0.0,
            lp: None,
            boundary_clear: true,
            admissible: true,
            score: 0.0,
        };
        Ok(Self {
            i0,
            delta: m as f64 * grid.h(),
            delta_cells: m,
            min_side,
            n_outer,
            bound_factor: f64::INFINITY,
            totals,
            candidates: vec![cand],
        })
    }

    pub fn selected(&self) -> &CrownCandidate {
        self.candidates.iter().find(|c| c.index == self.i0).expect("selected index among candidates")
    }
}

/// Half-width in cells of `Q^i`.
pub fn q_half_cells(n_outer: usize, delta_cells: usize, i: usize) -> usize {
    (n_outer - i) * delta_cells
}

pub fn q_box(grid: &GridSpec, n_outer: usize, delta_cells: usize, i: usize) -> AaBox {
    AaBox::centered(q_half_cells(n_outer, delta_cells, i) as f64 * grid.h())
}

/// Whether `J` has a face lying on `∂Q` for the centred cube of half-width `half` cells.
pub fn jumps_on_cube_boundary(jumps: &JumpSet, half: usize) -> bool {
    let grid = jumps.grid();
    let l = grid.cells_per_side / 2;
    if half > l {
        return false;
    }
    let (lo, hi) = (l - half, l + half);
    jumps.faces().into_iter().any(|Face { axis, cell }| {
        let c = grid.coords(cell);
        let plane = c[axis] + 1;
        (plane == lo || plane == hi) && (0..grid.dim).filter(|&a| a != axis).all(|a| c[a] >= lo && c[a] < hi)
    })
}

/// The selection rule: among indices whose budgets respect `bound · total`,
/// the one minimising `Σ budget/total`, smallest index on ties.
/// Zero totals contribute zero to the score.
pub fn choose_index(budgets: &[(f64, f64, Option<f64>)], totals: &CrownTotals, bound: f64) -> Option<usize> {
    let ratio = |x: f64, t: f64| if t > 0.0 { x / t } else { 0.0 };
    let mut best: Option<(usize, f64)> = None;
    for (k, &(a, b, c)) in budgets.iter().enumerate() {
        let ok_a = a <= bound * totals.strain;
        let ok_b = b <= bound * totals.jump;
        let ok_c = match (c, totals.lp) {
            (Some(c), Some(t)) => c <= bound * t,
            _ => true,
        };
        if !(ok_a && ok_b && ok_c) {
            continue;
        }
        let mut score = ratio(a, totals.strain) + ratio(b, totals.jump);
        if let (Some(c), Some(t)) = (c, totals.lp) {
            score += ratio(c, t);
        }
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((k, score));
        }
    }
    best.map(|(k, _)| k)
}

/// Selects `i₀` for `(u, J)` at covering scale `delta`.
pub fn select_crown(
    u: &DisplacementField,
    jumps: &JumpSet,
    delta: f64,
    include_lp_budget: bool,
    p: f64,
    min_side: usize,
) -> Result<CrownSelection, CoveringError> {
    let grid = *u.grid();
    if jumps.grid() != &grid {
        return Err(CoveringError::Field(field_core::FieldError::GridMismatch));
    }
    if (grid.half_width - 1.0).abs() > 1e-12 {
        return Err(CoveringError::UnitCubeRequired(grid.half_width));
    }
    let m = align_delta(&grid, delta, min_side)?;
    let h = grid.h();
    let delta = m as f64 * h;
    let l = grid.cells_per_side / 2;
    let n_outer = l / m;
    if n_outer < 4 {
        return Err(CoveringError::CrownInfeasible(format!("N = {n_outer} < 4 at δ = {delta}")));
    }
    let sq = delta.sqrt();
    let max_i = (1.0 / sq - 3.0 + 1e-12).floor();
    if max_i < 1.0 {
        return Err(CoveringError::CrownInfeasible(format!("no index in [1, 1/√δ − 3] at δ = {delta}")));
    }
    let max_i = (max_i as usize).min(n_outer - 2);

    let strain = symmetric_gradient(u, jumps)?;
    // round-off strain of rigid pieces would otherwise decide ties
    let floor = 1e-12 * (u.max_abs() / h).max(1.0);
    let norms: Vec<f64> = strain.norms().into_iter().map(|x| if x <= floor { 0.0 } else { x }).collect();
    let band = Region::annulus(1.0, 1.0 - sq);
    let vol = grid.cell_volume();
    let sum_over = |region: &Region, f: &dyn Fn(usize) -> f64| -> f64 {
        (0..grid.num_cells()).filter(|&c| region.contains_cell(&grid, c)).map(f).sum::<f64>() * vol
    };
    let strain_p = |c: usize| norms[c].powf(p);
    let lp_p = |c: usize| field_core::norm3(u.value(c)).powf(p);
    let totals = CrownTotals {
        strain: sum_over(&band, &strain_p),
        jump: jumps.measure_in(&band),
        lp: include_lp_budget.then(|| sum_over(&band, &lp_p)),
    };
    let bound = 8.0 * sq;

    let mut candidates = Vec::new();
    for i in 1..=max_i {
        let outer = q_box(&grid, n_outer, m, i);
        let mid = q_box(&grid, n_outer, m, i + 1);
        let inner = q_box(&grid, n_outer, m, i + 2);
        let pair = Region::Diff(Box::new(Region::Box(outer)), Box::new(Region::Box(inner)));
        let crown = Region::Diff(Box::new(Region::Box(outer)), Box::new(Region::Box(mid)));
        candidates.push(CrownCandidate {
            index: i,
            strain: sum_over(&pair, &strain_p),
            jump: jumps.measure_in(&pair),
            lp: include_lp_budget.then(|| sum_over(&crown, &lp_p)),
            boundary_clear: !jumps_on_cube_boundary(jumps, q_half_cells(n_outer, m, i)),
            admissible: false,
            score: f64::INFINITY,
        });
    }
    let clear: Vec<usize> = (0..candidates.len()).filter(|&k| candidates[k].boundary_clear).collect();
    let budgets: Vec<_> = clear.iter().map(|&k| (candidates[k].strain, candidates[k].jump, candidates[k].lp)).collect();
    let ratio = |x: f64, t: f64| if t > 0.0 { x / t } else { 0.0 };
    for &k in &clear {
        let c = &mut candidates[k];
        let ok = c.strain <= bound * totals.strain
            && c.jump <= bound * totals.jump
            && match (c.lp, totals.lp) {
                (Some(x), Some(t)) => x <= bound * t,
                _ => true,
            };
        c.admissible = ok;
        c.score = ratio(c.strain, totals.strain)
            + ratio(c.jump, totals.jump)
            + match (c.lp, totals.lp) {
                (Some(x), Some(t)) => ratio(x, t),
                _ => 0.0,
            };
    }
    let pick = choose_index(&budgets, &totals, bound)
        .ok_or_else(|| CoveringError::CrownInfeasible("no candidate satisfies the crown bounds".into()))?;
    Ok(CrownSelection {
        i0: candidates[clear[pick]].index,
        delta,
        delta_cells: m,
        min_side,
        n_outer,
        bound_factor: bound,
        totals,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_returns_first() {
        let totals = CrownTotals { strain: 1.0, jump: 1.0, lp: None };
        let budgets = [(1.0, 0.0, None), (0.0, 1.0, None)];
        assert_eq!(choose_index(&budgets, &totals, 1.0), Some(0));
    }

    #[test]
    fn avoids_the_loaded_annulus() {
        let totals = CrownTotals { strain: 1.0, jump: 1.0, lp: None };
        let mut budgets = vec![(0.0, 0.0, None); 8];
        budgets[0] = (1.0, 1.0, None);
        let k = choose_index(&budgets, &totals, 2.0 / 8.0).unwrap();
        assert_ne!(k, 0);
        budgets.swap(0, 3);
        assert_eq!(choose_index(&budgets, &totals, 2.0 / 8.0), Some(0));
    }

    #[test]
    fn alignment_rounds_up() {
        let g = GridSpec::unit(2, 256).unwrap();
        assert_eq!(align_delta(&g, 1.0 / 16.0, 4).unwrap(), 8);
        assert_eq!(align_delta(&g, 0.07, 4).unwrap(), 12);
        assert_eq!(align_delta(&g, 0.05, 4).unwrap(), 8);
        assert!(matches!(align_delta(&g, 0.02, 4), Err(CoveringError::GridTooCoarse { .. })));
    }
}
