//! Minimization over crack configurations: exhaustive enumeration of every
//! subset of the candidate faces, or greedy single-face flips.

use std::collections::BTreeMap;
use std::io::Write;

use field_core::{DisplacementField, EnergyBreakdown, Face, GridSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::solver::{solve_elastic, ElasticSolution, Problem};
use crate::OracleError;

/// Largest candidate count searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 24;

/// Energies closer than this, relative to the larger, count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// A subset of an ordered list of candidate faces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrackConfig {
    pub candidates: Vec<Face>,
    pub active: Vec<bool>,
}

impl CrackConfig {
    pub fn new(candidates: Vec<Face>) -> Self {
        let active = vec![false; candidates.len()];
        Self { candidates, active }
    }

    pub fn with_active(&self, active: Vec<bool>) -> Self {
        Self { candidates: self.candidates.clone(), active }
    }

    /// Bit `i` of `mask` switches candidate `i`.
    pub fn from_mask(candidates: &[Face], mask: u64) -> Self {
        let active = (0..candidates.len()).map(|i| mask >> i & 1 == 1).collect();
        Self { candidates: candidates.to_vec(), active }
    }

    pub fn active_faces(&self) -> impl Iterator<Item = Face> + '_ {
        self.candidates.iter().zip(&self.active).filter(|(_, &a)| a).map(|(f, _)| *f)
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn area(&self, grid: &GridSpec) -> f64 {
        self.count() as f64 * grid.face_area()
    }

    /// One character per candidate, candidate 0 first.
    pub fn bits(&self) -> String {
        self.active.iter().map(|&a| if a { '1' } else { '0' }).collect()
    }
}

/// One row of the configuration table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEnergy {
    pub bits: String,
    pub active: usize,
    pub bulk: f64,
    pub fidelity: f64,
    pub surface: f64,
    pub total: f64,
}

impl ConfigEnergy {
    fn new(config: &CrackConfig, e: &EnergyBreakdown) -> Self {
        Self {
            bits: config.bits(),
            active: config.count(),
            bulk: e.bulk,
            fidelity: e.fidelity,
            surface: e.surface,
            total: e.total(),
        }
    }
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

/// Lowest energy; among ties, fewer active faces, then the smaller bit string.
fn better(a: &ConfigEnergy, b: &ConfigEnergy) -> bool {
    if !ties(a.total, b.total) {
        return a.total < b.total;
    }
    (a.active, &a.bits) < (b.active, &b.bits)
}

/// Index of the winner under the tie rules: the minimum energy first, then
/// every row tying with it competes on face count and bit string.
fn select(rows: &[ConfigEnergy]) -> usize {
    let min = rows.iter().map(|r| r.total).fold(f64::INFINITY, f64::min);
    let mut best: Option<usize> = None;
    for (k, r) in rows.iter().enumerate().filter(|(_, r)| ties(r.total, min)) {
        let wins = match best {
            None => true,
            Some(b) => (r.active, &r.bits) < (rows[b].active, &rows[b].bits),
        };
        if wins {
            best = Some(k);
        }
    }
    best.expect("nonempty table")
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_config: CrackConfig,
    pub minimizer_u: DisplacementField,
    pub min_energy: f64,
    pub best_energy: EnergyBreakdown,
    /// Every evaluated configuration, in bit-string order.
    pub per_config_energies: Vec<ConfigEnergy>,
    /// Energy of the input minus `min_energy`; without an input the
    /// minimizer is its own input.
    pub psi0: f64,
    /// Set when the search was greedy rather than exhaustive.
    pub heuristic: bool,
    pub max_consistency: f64,
    pub max_residual: f64,
}

impl OracleResult {
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "best_bits": self.best_config.bits(),
            "active_faces": self.best_config.count(),
            "candidates": self.best_config.candidates.len(),
            "min_energy": self.min_energy,
            "bulk": self.best_energy.bulk,
            "fidelity": self.best_energy.fidelity,
            "surface": self.best_energy.surface,
            "configs_evaluated": self.per_config_energies.len(),
            "psi0": self.psi0,
            "heuristic": self.heuristic,
            "max_consistency": self.max_consistency,
            "max_residual": self.max_residual,
        })
    }

    /// The configuration table as CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), OracleError> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.per_config_energies {
            w.serialize(row).map_err(|e| OracleError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| OracleError::Io(e.to_string()))
    }
}

struct Evaluated {
    row: ConfigEnergy,
    consistency: f64,
    residual: f64,
}

fn evaluate(problem: &Problem, config: &CrackConfig) -> Result<Evaluated, OracleError> {
    let s: ElasticSolution = solve_elastic(problem, config)?;
    Ok(Evaluated { row: ConfigEnergy::new(config, &s.energy), consistency: s.consistency, residual: s.residual })
}

fn check_candidates(problem: &Problem, candidates: &[Face]) -> Result<(), OracleError> {
    let grid = problem.grid();
    let mut seen = std::collections::BTreeSet::new();
    for &f in candidates {
        if !grid.is_interior_face(f) {
            return Err(field_core::FieldError::NotInterior { axis: f.axis, cell: f.cell }.into());
        }
        if !seen.insert(f) {
            return Err(OracleError::InvalidCandidate(format!("face (axis {}, cell {}) listed twice", f.axis, f.cell)));
        }
        if problem.base_jumps.contains(f) {
            return Err(OracleError::InvalidCandidate(format!("face (axis {}, cell {}) is always cracked", f.axis, f.cell)));
        }
    }
    Ok(())
}

fn finish(
    problem: &Problem,
    candidates: &[Face],
    mut rows: Vec<Evaluated>,
    heuristic: bool,
) -> Result<OracleResult, OracleError> {
    rows.sort_by(|a, b| a.row.bits.cmp(&b.row.bits));
    let max_consistency = rows.iter().map(|r| r.consistency).fold(0.0, f64::max);
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let table: Vec<ConfigEnergy> = rows.into_iter().map(|r| r.row).collect();
    let best = &table[select(&table)];
    let active = best.bits.chars().map(|c| c == '1').collect();
    let best_config = CrackConfig { candidates: candidates.to_vec(), active };
    let sol = solve_elastic(problem, &best_config)?;
    Ok(OracleResult {
        best_config,
        min_energy: best.total,
        psi0: sol.energy.total() - best.total,
        best_energy: sol.energy,
        minimizer_u: sol.u,
        per_config_energies: table,
        heuristic,
        max_consistency,
        max_residual,
    })
}

/// Minimizes over every subset of `candidates`, or greedily when
/// `heuristic` is set.
pub fn brute_force_minimize(problem: &Problem, candidates: &[Face], heuristic: bool) -> Result<OracleResult, OracleError> {
    if heuristic {
        return greedy_minimize(problem, candidates).map(|g| g.result);
    }
    problem.validate()?;
    check_candidates(problem, candidates)?;
    if candidates.len() > EXHAUSTIVE_LIMIT {
        return Err(OracleError::TooManyCandidates { count: candidates.len(), limit: EXHAUSTIVE_LIMIT });
    }
    let rows = (0..1u64 << candidates.len())
        .into_par_iter()
        .map(|mask| evaluate(problem, &CrackConfig::from_mask(candidates, mask)))
        .collect::<Result<Vec<_>, _>>()?;
    finish(problem, candidates, rows, false)
}

/// Outcome of the two greedy descents.
#[derive(Debug, Clone)]
pub struct GreedyResult {
    pub result: OracleResult,
    pub from_empty: ConfigEnergy,
    pub from_full: ConfigEnergy,
}

/// Best single-face flip until none lowers the energy, started from the
/// empty and from the full configuration.
pub fn greedy_minimize(problem: &Problem, candidates: &[Face]) -> Result<GreedyResult, OracleError> {
    problem.validate()?;
    check_candidates(problem, candidates)?;
    let base = CrackConfig::new(candidates.to_vec());
    let mut cache: BTreeMap<String, Evaluated> = BTreeMap::new();
    let mut descend = |start: Vec<bool>| -> Result<ConfigEnergy, OracleError> {
        let mut cur = base.with_active(start);
        loop {
            let mut probes = vec![cur.clone()];
            for i in 0..candidates.len() {
                let mut next = cur.active.clone();
                next[i] = !next[i];
                probes.push(base.with_active(next));
            }
            let missing: Vec<&CrackConfig> = probes.iter().filter(|c| !cache.contains_key(&c.bits())).collect();
            let fresh = missing.par_iter().map(|c| evaluate(problem, c)).collect::<Result<Vec<_>, _>>()?;
            for e in fresh {
                cache.insert(e.row.bits.clone(), e);
            }
            let here = cache[&cur.bits()].row.clone();
            let mut best = here.clone();
            let mut best_k = None;
            for (k, c) in probes.iter().enumerate().skip(1) {
                let row = &cache[&c.bits()].row;
                if row.total < here.total && !ties(row.total, here.total) && better(row, &best) {
                    best = row.clone();
                    best_k = Some(k);
                }
            }
            match best_k {
                Some(k) => cur = probes[k].clone(),
                None => return Ok(here),
            }
        }
    };
    let from_empty = descend(vec![false; candidates.len()])?;
    let from_full = descend(vec![true; candidates.len()])?;
    let rows: Vec<Evaluated> = cache.into_values().collect();
    // every probe is at least as high as the end point of its descent
    let result = finish(problem, candidates, rows, true)?;
    Ok(GreedyResult { result, from_empty, from_full })
}
