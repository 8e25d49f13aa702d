use covering::{
    build_covering, classify, partition_of_unity, select_crown, CoveringError, CrownSelection, DyadicCube,
    PartitionReport, WhitneyCovering,
};
use field_core::{norm3, symmetric_gradient, DisplacementField, EnergyParams, Face, JumpSet, Mollifier, Vec3};
use kornfit::{extract_exceptional_set, patched_mollification, FitConfig, FitReport, DEFAULT_C_STAR};
use rayon::prelude::*;
use serde::Serialize;

use crate::ApproxError;

/// `η = 1 / (2 · 8^n · c_*)`.
pub fn default_eta(dim: usize, c_star: f64) -> f64 {
    1.0 / (2.0 * 8f64.powi(dim as i32) * c_star)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxConfig {
    /// Regime threshold; `None` uses [`default_eta`] with the fit's `c_*`.
    pub eta: Option<f64>,
    /// Covering scale; `None` uses `max(H^{n−1}(J)^{1/n}, 2 · min_side · h)`
    /// capped at `1/16`, the largest scale with a crown index.
    pub delta: Option<f64>,
    /// Smallest cube side in cells; `None` tries 4, 2 and 1 in turn.
    pub min_side: Option<usize>,
    pub fit: FitConfig,
    pub mollifier: Mollifier,
    /// `u ∈ L^p`: the crown also balances the `L^p` mass.
    pub lp_budget: bool,
    /// A face of `∂B` joins the new jump set when `ũ` and `u` differ by more
    /// than this times `1 + max|u|` on its blended side.
    pub jump_tol: f64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            eta: None,
            delta: None,
            min_side: None,
            fit: FitConfig::default(),
            mollifier: Mollifier::default(),
            lp_budget: true,
            jump_tol: 1e-9,
        }
    }
}

impl ApproxConfig {
    /// The configured `η`, or [`default_eta`] for `dim`.
    pub fn eta_for(&self, dim: usize) -> f64 {
        let c_star = if self.fit.c_star > 0.0 { self.fit.c_star } else { DEFAULT_C_STAR };
        self.eta.unwrap_or_else(|| default_eta(dim, c_star))
    }
}

/// Per-cube outcome of the fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubeSummary {
    pub index: usize,
    pub level: u32,
    pub side: usize,
    pub omega_cells: usize,
    pub budget_cells: usize,
    pub contract_violated: bool,
    pub omega_ratio: f64,
    pub sobolev_ratio: f64,
    pub lp_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub u_tilde: DisplacementField,
    pub new_jump: JumpSet,
    /// `ω̃ = ∪ω_i \ B`, sorted cell indices.
    pub omega_tilde: Vec<usize>,
    pub omega_volume: f64,
    /// Half-width of `Q^{i₀}`.
    pub radius: f64,
    pub delta: f64,
    pub eta: f64,
    pub selection: CrownSelection,
    pub covering: WhitneyCovering,
    pub partition: PartitionReport,
    pub cubes: Vec<CubeSummary>,
    /// Good cubes whose fit exceeded its budget or smallness contract.
    pub flagged: usize,
}

impl ApproxResult {
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "delta": self.delta,
            "eta": self.eta,
            "R": self.radius,
            "i0": self.selection.i0,
            "min_side": self.covering.min_side,
            "cubes": self.covering.cubes.len(),
            "good_cubes": self.covering.good_count(),
            "flagged_cubes": self.flagged,
            "omega_cells": self.omega_tilde.len(),
            "omega_volume": self.omega_volume,
            "new_jump_faces": self.new_jump.len(),
            "partition": self.partition,
        })
    }
}

const MAX_DELTA: f64 = 1.0 / 16.0;

struct Setup {
    selection: CrownSelection,
    delta: f64,
}

fn setup(u: &DisplacementField, jumps: &JumpSet, config: &ApproxConfig, p: f64, eta: f64) -> Result<Setup, ApproxError> {
    let grid = *u.grid();
    let dim = grid.dim;
    let h = grid.h();
    let jump = jumps.measure();
    let sides = match config.min_side {
        Some(m) => vec![m],
        None => vec![4, 2, 1],
    };
    let mut last: Option<ApproxError> = None;
    for ms in sides {
        let target = config.delta.unwrap_or_else(|| jump.powf(1.0 / dim as f64).max(2.0 * ms as f64 * h).min(MAX_DELTA));
        // a crown without slabs only as the last resort
        if config.min_side.is_none() && ms > 1 && target < 2.0 * ms as f64 * h * (1.0 - 1e-9) {
            if last.is_none() {
                last = Some(CoveringError::GridTooCoarse { delta: target, h, min_side: ms }.into());
            }
            continue;
        }
        let selection = match select_crown(u, jumps, target, config.lp_budget, p, ms) {
            Ok(s) => s,
            Err(e @ (CoveringError::GridTooCoarse { .. } | CoveringError::CrownInfeasible(_))) => {
                if !matches!(last, Some(ApproxError::Regime { .. })) {
                    last = Some(e.into());
                }
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let delta = selection.delta;
        if !(delta < eta) || jump > eta * delta.powi(dim as i32 - 1) * (1.0 + 1e-12) {
            last = Some(ApproxError::Regime { delta, jump, eta });
            continue;
        }
        return Ok(Setup { selection, delta });
    }
    Err(last.expect("at least one side tried"))
}

struct Piece {
    cube: usize,
    fit: FitReport,
    values: Vec<(usize, Vec3)>,
}

fn piece_value(piece: &Piece, cell: usize) -> Option<Vec3> {
    piece.values.binary_search_by_key(&cell, |t| t.0).ok().map(|k| piece.values[k].1)
}

/// Builds `ũ`, `J_ũ` and `ω̃` for `(u, J)`.
pub fn approximate(
    u: &DisplacementField,
    jumps: &JumpSet,
    params: &EnergyParams,
    config: &ApproxConfig,
) -> Result<ApproxResult, ApproxError> {
    let grid = *u.grid();
    if jumps.grid() != &grid || params.g.grid() != &grid {
        return Err(field_core::FieldError::GridMismatch.into());
    }
    params.validate()?;
    let dim = grid.dim;
    let p = params.p;
    let fit_config = FitConfig { p, ..config.fit };
    fit_config.validate()?;
    let eta = config.eta_for(dim);
    if !(eta.is_finite() && eta > 0.0) || !(config.jump_tol >= 0.0) {
        return Err(ApproxError::InvalidConfig(format!("η = {eta}, jump tolerance = {}", config.jump_tol)));
    }

    let Setup { selection, delta } = setup(u, jumps, config, p, eta)?;
    let covering = classify(build_covering(&grid, &selection, delta)?, jumps, eta);
    let strain = symmetric_gradient(u, jumps)?;
    let good: Vec<(usize, DyadicCube)> =
        covering.cubes.iter().copied().enumerate().filter(|(i, _)| covering.good[*i]).collect();
    let pieces: Vec<Piece> = good
        .par_iter()
        .map(|&(ci, q)| -> Result<Piece, ApproxError> {
            let fit = extract_exceptional_set(u, jumps, &strain, &q, &fit_config)?;
            let values = patched_mollification(u, &q, &fit, &config.mollifier);
            Ok(Piece { cube: ci, fit, values })
        })
        .collect::<Result<_, _>>()?;
    let mut slot = vec![usize::MAX; covering.cubes.len()];
    for (k, piece) in pieces.iter().enumerate() {
        slot[piece.cube] = k;
    }

    let pou = partition_of_unity(&covering)?;
    let blend = covering.blend_mask();
    let mut values = u.values().to_vec();
    for (c, out) in values.iter_mut().enumerate() {
        if !blend[c] {
            continue;
        }
        let mut acc = [0.0; 3];
        for &(ci, w) in pou.weights(c) {
            let v = piece_value(&pieces[slot[ci as usize]], c)
                .ok_or_else(|| CoveringError::Defect(format!("weight of cube {ci} outside its piece at cell {c}")))?;
            for a in 0..3 {
                acc[a] += w * v[a];
            }
        }
        *out = acc;
    }
    let u_tilde = DisplacementField::new(grid, values)?;

    let tol = config.jump_tol * (1.0 + u.max_abs());
    let mut new_jump = JumpSet::empty(grid);
    for f in grid.interior_faces() {
        let (c0, c1) = grid.face_cells(f);
        let keep = match (blend[c0], blend[c1]) {
            (false, false) => jumps.contains(f),
            (true, true) => false,
            (true, false) | (false, true) => {
                let g = if blend[c0] { c0 } else { c1 };
                jumps.contains(f) || norm3(&field_core::sub3(u_tilde.value(g), u.value(g))) > tol
            }
        };
        if keep {
            new_jump.insert(f)?;
        }
    }

    let mut omega: Vec<usize> =
        pieces.iter().flat_map(|pc| pc.fit.omega.cells.iter().copied()).filter(|&c| !covering.bad[c]).collect();
    omega.sort_unstable();
    omega.dedup();
    let cubes: Vec<CubeSummary> = pieces
        .iter()
        .map(|pc| {
            let q = covering.cubes[pc.cube];
            CubeSummary {
                index: pc.cube,
                level: q.level,
                side: q.side,
                omega_cells: pc.fit.omega.cells.len(),
                budget_cells: pc.fit.budget_cells,
                contract_violated: pc.fit.contract_violated,
                omega_ratio: pc.fit.constants.omega_ratio,
                sobolev_ratio: pc.fit.constants.sobolev_ratio,
                lp_ratio: pc.fit.constants.lp_ratio,
            }
        })
        .collect();
    let flagged = cubes.iter().filter(|c| c.contract_violated).count();
    Ok(ApproxResult {
        u_tilde,
        new_jump,
        omega_volume: omega.len() as f64 * grid.cell_volume(),
        omega_tilde: omega,
        radius: covering.radius(),
        delta,
        eta,
        selection,
        partition: pou.report,
        covering,
        cubes,
        flagged,
    })
}

/// Whether `face` separates a cell of `B` from a cell outside it.
pub(crate) fn on_bad_boundary(covering: &WhitneyCovering, face: Face) -> bool {
    let (c0, c1) = covering.grid.face_cells(face);
    covering.bad[c0] != covering.bad[c1]
}
