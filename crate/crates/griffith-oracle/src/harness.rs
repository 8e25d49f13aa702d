//! Sequences with vanishing jump: approximation at every level, rigid
//! normalization, and the semicontinuity of the elastic energy in the limit.

use std::io::Write;

use approximator::instances::smooth_background;
use approximator::{approximate, ApproxConfig, ApproxError};
use field_core::synth::{affine_eval, random_skew, random_vector, rigid_field, with_cracks, with_patches, PlanarCrack, RigidPatch};
use field_core::{
    energy_g0, norm3, DisplacementField, EnergyParams, GridSpec, HookeTensor, JumpSet, Mat3, Region, Vec3,
};
use kornfit::fit_rigid_motion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::OracleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    /// The same smooth field at every level.
    Smooth,
    /// A central planar crack with fixed opening whose length halves.
    ShrinkingCrack,
    /// A central rigid inclusion whose side halves, with a drift and an
    /// inclusion motion that flip sign from level to level.
    RigidPatches,
}

impl Generator {
    /// 2D grid resolution the generator is run at for `levels` levels.
    pub fn cells_per_side(self, levels: usize) -> usize {
        match self {
            Generator::RigidPatches => 64 << levels,
            _ => 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub generator: Generator,
    pub levels: usize,
    pub seed: u64,
    pub beta: f64,
    /// `κ_h = κ₀ 2^{−level}`.
    pub kappa0: f64,
}

impl SequenceSpec {
    pub fn new(generator: Generator, levels: usize, seed: u64) -> Self {
        Self { generator, levels, seed, beta: 1.0, kappa0: 0.5 }
    }
}

/// One member `u_h` of a sequence.
#[derive(Debug, Clone)]
pub struct Member {
    pub u: DisplacementField,
    pub jumps: JumpSet,
    pub params: EnergyParams,
}

fn scaled(w: &Mat3, b: &Vec3, s: f64) -> (Mat3, Vec3) {
    let mut w2 = *w;
    w2.iter_mut().flatten().for_each(|v| *v *= s);
    (w2, [s * b[0], s * b[1], s * b[2]])
}

fn affine_background(grid: GridSpec, rng: &mut ChaCha8Rng) -> Result<DisplacementField, OracleError> {
    let mut a = [[0.0; 3]; 3];
    for row in a.iter_mut().take(2) {
        for v in row.iter_mut().take(2) {
            *v = rng.gen_range(-0.2..0.2);
        }
    }
    let b = random_vector(rng, 2, 0.2);
    Ok(DisplacementField::from_fn(grid, |x| affine_eval(&a, &b, x))?)
}

/// Member `level` of the sequence.
pub fn sequence_member(spec: &SequenceSpec, level: usize) -> Result<Member, OracleError> {
    let m = spec.generator.cells_per_side(spec.levels);
    let grid = GridSpec::unit(2, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let base = match spec.generator {
        // The mollifier reproduces affine fields, so only the patches separate
        // ũ_h from u_h away from the exceptional set.
        Generator::RigidPatches => affine_background(grid, &mut rng)?,
        _ => smooth_background(grid, &mut rng),
    };
    let size = 1usize << spec.levels.saturating_sub(level + 1);
    let mid = m / 2;
    let sign = if level % 2 == 0 { 1.0 } else { -1.0 };
    let syn = match spec.generator {
        Generator::Smooth => field_core::synth::Synthetic { u: base, jumps: JumpSet::empty(grid) },
        Generator::ShrinkingCrack => {
            let lo = mid - size / 2;
            let crack =
                PlanarCrack { axis: 0, plane: mid - 1, lo: [0, lo, 0], hi: [0, lo + size, 0], opening: [0.1, 0.05, 0.0] };
            with_cracks(&base, &[crack])?
        }
        Generator::RigidPatches => {
            let (w0, b0) = (random_skew(&mut rng, 2, 0.3), random_vector(&mut rng, 2, 0.3));
            let (w, b) = scaled(&w0, &b0, sign);
            let drift = rigid_field(grid, &w, &b);
            let values = base.values().iter().zip(drift.values()).map(|(p, q)| [p[0] + q[0], p[1] + q[1], 0.0]);
            let shifted = DisplacementField::new(grid, values.collect())?;
            let (pw, pb) = (random_skew(&mut rng, 2, 0.2), random_vector(&mut rng, 2, 0.2));
            let (pw, pb) = scaled(&pw, &pb, sign);
            // Two cells at least, so every patch cell keeps a strain stencil.
            let side = 2 * size;
            let lo = mid - side / 2;
            let patch = RigidPatch { lo: [lo, lo, 0], hi: [lo + side, lo + side, 1], w: pw, b: pb };
            with_patches(&shifted, &[patch])?
        }
    };
    let mut params = EnergyParams::standard(HookeTensor::new(1.0, 1.0, 2)?, grid);
    params.beta = spec.beta;
    params.kappa = spec.kappa0 / 2f64.powi(level as i32);
    Ok(Member { u: syn.u, jumps: syn.jumps, params })
}

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub approx: ApproxConfig,
    pub radii: Vec<f64>,
    /// Semicontinuity slack relative to the reference energy.
    pub tolerance: f64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            approx: ApproxConfig { eta: Some(2.0), ..Default::default() },
            radii: vec![0.25, 0.5, 0.75],
            tolerance: 1e-6,
        }
    }
}

/// Per-level measurements; `Q_t` quantities follow the order of the radii.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: usize,
    pub skipped: Option<String>,
    pub delta: f64,
    pub kappa: f64,
    pub beta: f64,
    pub jump_measure: f64,
    pub g0: f64,
    pub omega_cells: usize,
    /// Median of `|u_h − a_h − u_∞|` outside `ω̃_h`.
    pub median_residual: f64,
    pub bulk_in: Vec<f64>,
    pub surface_in: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemicontinuityRow {
    pub t: f64,
    pub limit_energy: f64,
    pub min_energy: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub level: usize,
    /// `β_h H^{n−1}(J_{u_h} ∩ Q_t)` at the previous level over this one.
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessReport {
    pub generator: Generator,
    pub levels: Vec<LevelRow>,
    pub reference: f64,
    pub semicontinuity: Vec<SemicontinuityRow>,
    pub surface_decay: Vec<DecayRow>,
    pub pass: bool,
}

impl HarnessReport {
    /// One CSV row per level for plotting.
    pub fn write_levels_csv<W: Write>(&self, out: W) -> Result<(), OracleError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| OracleError::Io(e.to_string());
        let mut header = vec!["level", "skipped", "delta", "kappa", "beta", "jump_measure", "g0", "omega_cells", "median_residual"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        if let Some(first) = self.levels.first() {
            for k in 0..first.bulk_in.len() {
                header.push(format!("bulk_t{k}"));
            }
            for k in 0..first.surface_in.len() {
                header.push(format!("surface_t{k}"));
            }
        }
        w.write_record(&header).map_err(io)?;
        for r in &self.levels {
            let mut rec = vec![
                r.level.to_string(),
                r.skipped.clone().unwrap_or_default(),
                r.delta.to_string(),
                r.kappa.to_string(),
                r.beta.to_string(),
                r.jump_measure.to_string(),
                r.g0.to_string(),
                r.omega_cells.to_string(),
                r.median_residual.to_string(),
            ];
            rec.extend(r.bulk_in.iter().map(|v| v.to_string()));
            rec.extend(r.surface_in.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| OracleError::Io(e.to_string()))
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Done {
    member: Member,
    /// `ũ_h − a_h`.
    normalized: DisplacementField,
    new_jump: JumpSet,
    omega: Vec<usize>,
    /// `u_h − a_h`.
    shifted: Vec<Vec3>,
}

/// Runs every level, then compares with the limit `u_∞ = ũ_L − a_L` of
/// the last level that stays in the approximation regime.
pub fn vanishing_jump_harness(spec: &SequenceSpec, config: &HarnessConfig) -> Result<HarnessReport, OracleError> {
    let mut rows = Vec::new();
    let mut done: Vec<Done> = Vec::new();
    for level in 0..spec.levels {
        let member = sequence_member(spec, level)?;
        let grid = *member.u.grid();
        let zero = vec![0.0; config.radii.len()];
        let mut row = LevelRow {
            level,
            skipped: None,
            delta: 0.0,
            kappa: member.params.kappa,
            beta: member.params.beta,
            jump_measure: member.jumps.measure(),
            g0: energy_g0(&member.u, &member.jumps, &member.params, &Region::All)?.total(),
            omega_cells: 0,
            median_residual: 0.0,
            bulk_in: zero.clone(),
            surface_in: zero,
        };
        for (k, &t) in config.radii.iter().enumerate() {
            let e = energy_g0(&member.u, &member.jumps, &member.params, &Region::cube(t))?;
            row.bulk_in[k] = e.bulk;
            row.surface_in[k] = e.surface;
        }
        match approximate(&member.u, &member.jumps, &member.params, &config.approx) {
            Ok(r) => {
                row.delta = r.delta;
                row.omega_cells = r.omega_tilde.len();
                let all: Vec<usize> = (0..grid.num_cells()).collect();
                let a = fit_rigid_motion(&r.u_tilde, &all, None, 2.0)?;
                let shifted: Vec<Vec3> = (0..grid.num_cells())
                    .map(|c| {
                        let v = member.u.value(c);
                        let w = a.eval(&grid.center(c));
                        [v[0] - w[0], v[1] - w[1], v[2] - w[2]]
                    })
                    .collect();
                let limit_shift: Vec<Vec3> = (0..grid.num_cells())
                    .map(|c| {
                        let v = r.u_tilde.value(c);
                        let w = a.eval(&grid.center(c));
                        [v[0] - w[0], v[1] - w[1], v[2] - w[2]]
                    })
                    .collect();
                let normalized = DisplacementField::new(grid, limit_shift)?;
                done.push(Done { member, normalized, new_jump: r.new_jump, omega: r.omega_tilde, shifted });
            }
            Err(ApproxError::Regime { .. }) => row.skipped = Some("outside the approximation regime".into()),
            Err(e) => return Err(e.into()),
        }
        rows.push(row);
    }
    let last = done.last().ok_or(OracleError::NoLevels)?;
    let limit = &last.normalized;
    let grid = *limit.grid();
    let mut k = 0;
    for row in rows.iter_mut().filter(|r| r.skipped.is_none()) {
        let d = &done[k];
        k += 1;
        let res: Vec<f64> = (0..grid.num_cells())
            .filter(|c| d.omega.binary_search(c).is_err())
            .map(|c| norm3(&field_core::sub3(&d.shifted[c], limit.value(c))))
            .collect();
        row.median_residual = median(res);
    }

    let reference = rows.iter().filter(|r| r.skipped.is_none()).map(|r| r.g0).fold(0.0, f64::max);
    let mut semicontinuity = Vec::new();
    for (k, &t) in config.radii.iter().enumerate() {
        let region = Region::cube(t);
        let limit_energy = energy_g0(limit, &last.new_jump, &last.member.params, &region)?.bulk;
        let min_energy = rows.iter().filter(|r| r.skipped.is_none()).map(|r| r.bulk_in[k]).fold(f64::INFINITY, f64::min);
        let slack = config.tolerance * reference;
        semicontinuity.push(SemicontinuityRow { t, limit_energy, min_energy, slack, pass: limit_energy <= min_energy + slack });
    }
    let mut surface_decay = Vec::new();
    let kept: Vec<&LevelRow> = rows.iter().filter(|r| r.skipped.is_none()).collect();
    for (k, &t) in config.radii.iter().enumerate() {
        for pair in kept.windows(2) {
            let (prev, cur) = (pair[0].surface_in[k], pair[1].surface_in[k]);
            let ratio = if cur > 0.0 { prev / cur } else if prev > 0.0 { f64::INFINITY } else { 1.0 };
            let pass = cur <= 0.5 * prev * (1.0 + 1e-12);
            surface_decay.push(DecayRow { t, level: pair[1].level, ratio, pass });
        }
    }
    let pass = semicontinuity.iter().all(|r| r.pass) && surface_decay.iter().all(|r| r.pass);
    Ok(HarnessReport { generator: spec.generator, levels: rows, reference, semicontinuity, surface_decay, pass })
}
