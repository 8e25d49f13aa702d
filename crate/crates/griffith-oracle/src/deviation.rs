use field_core::{energy_g0, AaBox, DisplacementField, EnergyBreakdown, EnergyParams, Face, JumpSet, Region};
use serde::Serialize;

use crate::search::{brute_force_minimize, OracleResult};
use crate::solver::{Boundary, Functional, Problem};
use crate::OracleError;

/// `Ψ_0` restricted to a finite competitor class.
///
/// The competitor minimum is an upper bound for the true infimum, so
/// `psi0` bounds the true deviation from below.
#[derive(Debug, Clone)]
pub struct Deviation {
    pub psi0: f64,
    pub input_energy: EnergyBreakdown,
    /// Least competitor energy.
    pub phi0_upper: f64,
    pub search: OracleResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationSummary {
    pub psi0: f64,
    pub input_energy: f64,
    pub phi0_upper: f64,
    pub competitors: usize,
    pub heuristic: bool,
    pub bound: &'static str,
}

impl Deviation {
    pub fn summary(&self) -> DeviationSummary {
        DeviationSummary {
            psi0: self.psi0,
            input_energy: self.input_energy.total(),
            phi0_upper: self.phi0_upper,
            competitors: self.search.per_config_energies.len(),
            heuristic: self.search.heuristic,
            bound: "psi0 is a lower bound: competitors are a finite subset",
        }
    }
}

/// Deviation of `(u, J)` from minimality of `G_0` on the box `A`.
///
/// Competitors agree with `u` on every cell not compactly inside `A` and
/// crack any subset of `candidates ∪ (J ∩ A)`; faces of `J` outside `A`
/// stay cracked. The input's own configuration is therefore a competitor.
pub fn deviation_psi0(
    u: &DisplacementField,
    jumps: &JumpSet,
    params: &EnergyParams,
    region: &AaBox,
    candidates: &[Face],
    heuristic: bool,
) -> Result<Deviation, OracleError> {
    let grid = *u.grid();
    if jumps.grid() != &grid || params.g.grid() != &grid {
        return Err(field_core::FieldError::GridMismatch.into());
    }
    let a = Region::Box(*region);
    let mut all: Vec<Face> = candidates.iter().copied().filter(|&f| a.contains_face(&grid, f)).collect();
    let mut base = jumps.clone();
    for f in jumps.faces().into_iter().filter(|&f| a.contains_face(&grid, f)) {
        base.remove(f);
        if !all.contains(&f) {
            all.push(f);
        }
    }
    let problem = Problem {
        params: params.clone(),
        functional: Functional::G0,
        boundary: Boundary::Inside { region: *region, field: u.clone() },
        base_jumps: base,
    };
    let mut search = brute_force_minimize(&problem, &all, heuristic)?;
    let input_energy = energy_g0(u, jumps, params, &a)?;
    let psi0 = input_energy.total() - search.min_energy;
    search.psi0 = psi0;
    Ok(Deviation { psi0, input_energy, phi0_upper: search.min_energy, search })
}
