use std::fs;
use std::path::{Path, PathBuf};

use approximator::instances::{shrinking_crack, smooth_background};
use approximator::{
    approximate, boundary_trace_check, decay_sweep, verify_properties, ApproxConfig, ApproxError,
    ApproxResult, PropertyReport, TraceConfig, TraceReport, VerifyConfig,
};
use field_core::io::{read_field, read_jumps, write_field, write_jumps};
use field_core::synth::{
    random_cracks, random_skew, random_vector, rigid_field, smooth_sinusoid, two_motion_crack, with_cracks, with_patches,
    RigidPatch, Synthetic,
};
use field_core::{DisplacementField, EnergyParams, GridSpec, HookeTensor, JumpSet};
use griffith_oracle::instances::{exhaustive_instance, plane_crack_problem};
use griffith_oracle::{
    brute_force_minimize, density_lower_bound_check, deviation_psi0, greedy_minimize, vanishing_jump_harness, Boundary,
    Generator, HarnessConfig, OracleError, SequenceSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::{
    ApproxArgs, GenArgs, GenSpec, HarnessArgs, HarnessGenerator, Input, Model, OracleArgs, OracleInstance, Pipeline,
    VerifyArgs,
};

pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Regime(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Approx(ApproxError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Field(#[from] field_core::FieldError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Regime(_) => 2,
            _ => 1,
        }
    }
}

impl From<ApproxError> for CliError {
    fn from(e: ApproxError) -> Self {
        match e {
            ApproxError::Regime { .. } => CliError::Regime(e.to_string()),
            e => CliError::Approx(e),
        }
    }
}

fn io<E: std::fmt::Display>(path: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(io(path))?;
    fs::write(path, text + "\n").map_err(io(path))
}

fn out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io(dir))
}

fn jumps_path(stem: &Path) -> PathBuf {
    stem.with_extension("jumps.json")
}

pub fn gen(a: &GenArgs) -> Result<Outcome, CliError> {
    let grid = GridSpec::unit(a.dim, a.m)?;
    let dim = grid.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let syn = match a.spec {
        GenSpec::Rigid => {
            let u = rigid_field(grid, &random_skew(&mut rng, dim, 1.0), &random_vector(&mut rng, dim, 1.0));
            Synthetic { u, jumps: JumpSet::empty(grid) }
        }
        GenSpec::SmoothSinusoid => Synthetic { u: smooth_sinusoid(grid, 0.05, 2.0, &mut rng), jumps: JumpSet::empty(grid) },
        GenSpec::TwoMotionCrack => {
            let (w1, b1) = (random_skew(&mut rng, dim, 0.5), random_vector(&mut rng, dim, 0.5));
            let (w2, b2) = (random_skew(&mut rng, dim, 0.5), random_vector(&mut rng, dim, 0.5));
            two_motion_crack(grid, a.area, (&w1, &b1), (&w2, &b2))?
        }
        GenSpec::RandomCracks => {
            let base = smooth_background(grid, &mut rng);
            let cracks = random_cracks(&grid, a.count, a.max_size, 0.2, &mut rng);
            with_cracks(&base, &cracks)?
        }
        GenSpec::RigidPatches => {
            let base = smooth_background(grid, &mut rng);
            let side = (a.m >> (4 + a.level)).max(1);
            let lo = a.m / 2 - side / 2;
            let mut p = RigidPatch { lo: [lo; 3], hi: [lo + side; 3], w: random_skew(&mut rng, dim, 0.2), b: random_vector(&mut rng, dim, 0.2) };
            if dim == 2 {
                p.lo[2] = 0;
                p.hi[2] = 1;
            }
            with_patches(&base, &[p])?
        }
        GenSpec::ShrinkingCrack => {
            if dim != 2 {
                return Err(CliError::Usage("shrinking-crack is two-dimensional".into()));
            }
            let (inst, _) = shrinking_crack(a.m, a.level, a.seed)?;
            Synthetic { u: inst.u, jumps: inst.jumps }
        }
    };
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        out_dir(dir)?;
    }
    let header = write_field(&a.out, &syn.u)?;
    write_jumps(&jumps_path(&a.out), &syn.jumps)?;

    let h = grid.h();
    let jump = syn.jumps.measure();
    let delta = jump.powf(1.0 / dim as f64).max(8.0 * h).min(1.0 / 16.0);
    let eta = ApproxConfig { eta: a.eta, ..Default::default() }.eta_for(dim);
    let in_regime = delta < eta && jump <= eta * delta.powi(dim as i32 - 1);
    println!("field: {}", header.display());
    println!("H^(n-1)(J) = {jump}");
    println!("delta = {delta}");
    println!("eta = {eta}");
    println!("delta < eta: {}", delta < eta);
    println!("in regime: {in_regime}");
    Ok(Outcome::Pass)
}

fn load(input: &Input) -> Result<(DisplacementField, JumpSet), CliError> {
    let u = read_field(&input.field)?;
    let jumps = match &input.jumps {
        Some(p) => read_jumps(p, *u.grid())?,
        None => JumpSet::empty(*u.grid()),
    };
    Ok((u, jumps))
}

fn params(model: &Model, grid: GridSpec) -> Result<EnergyParams, CliError> {
    let mut p = EnergyParams::standard(HookeTensor::new(model.lambda, model.mu, grid.dim)?, grid);
    p.p = model.p;
    p.kappa = model.kappa;
    p.beta = model.beta;
    p.validate()?;
    Ok(p)
}

fn config(pipeline: &Pipeline) -> ApproxConfig {
    let mut c = ApproxConfig { eta: pipeline.eta, delta: pipeline.delta, min_side: pipeline.min_side, ..Default::default() };
    if let Some(cs) = pipeline.c_star {
        c.fit.c_star = cs;
    }
    c
}

struct Run {
    result: ApproxResult,
    report: PropertyReport,
    trace: TraceReport,
}

impl Run {
    fn pass(&self) -> bool {
        self.report.pass && self.trace.pass
    }

    fn report_json(&self) -> serde_json::Value {
        json!({
            "pass": self.pass(),
            "summary": self.result.summary_json(),
            "properties": self.report,
            "trace": self.trace,
        })
    }
}

fn run(u: &DisplacementField, jumps: &JumpSet, params: &EnergyParams, config: &ApproxConfig) -> Result<Run, CliError> {
    let result = approximate(u, jumps, params, config)?;
    let report = verify_properties(u, jumps, &result, params, &VerifyConfig::default())?;
    let trace = boundary_trace_check(u, &result, &TraceConfig::default());
    Ok(Run { result, report, trace })
}

fn print_checks(report: &PropertyReport) {
    for c in &report.checks {
        let status = if c.pass { "pass" } else { "FAIL" };
        println!("{:<14} {status}  constant {:.4e}  limit {:.4e}", c.name, c.realized_constant, c.limit);
    }
}

pub fn approx(a: &ApproxArgs) -> Result<Outcome, CliError> {
    let (u, jumps) = load(&a.input)?;
    let params = params(&a.model, *u.grid())?;
    let base = config(&a.pipeline);
    out_dir(&a.out)?;
    if let Some(k) = a.sweep {
        return sweep(&u, &jumps, &params, &base, k, &a.out);
    }
    let r = run(&u, &jumps, &params, &base)?;
    write_field(&a.out.join("u_tilde"), &r.result.u_tilde)?;
    write_jumps(&a.out.join("new_jumps.json"), &r.result.new_jump)?;
    write_json(&a.out.join("omega.json"), &json!({ "cells": r.result.omega_tilde, "volume": r.result.omega_volume }))?;
    write_json(&a.out.join("covering.json"), &r.result.covering.to_json())?;
    write_json(&a.out.join("report.json"), &r.report_json())?;
    print_checks(&r.report);
    println!("trace {}", if r.trace.pass { "pass" } else { "FAIL" });
    Ok(Outcome::from(r.pass()))
}

fn sweep(
    u: &DisplacementField,
    jumps: &JumpSet,
    params: &EnergyParams,
    base: &ApproxConfig,
    k: u32,
    out: &Path,
) -> Result<Outcome, CliError> {
    let delta0 = base.delta.unwrap_or(1.0 / 16.0);
    let path = out.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path).map_err(io(&path))?;
    w.write_record(["property", "k", "delta", "p3_relative_excess", "pass"]).map_err(io(&path))?;
    let mut points = Vec::new();
    let mut pass = true;
    for i in 0..k {
        let delta = delta0 / 2f64.powi(i as i32);
        let config = ApproxConfig { delta: Some(delta), ..base.clone() };
        let r = run(u, jumps, params, &config)?;
        pass &= r.pass();
        points.push((r.result.delta, r.report.p3_relative_excess));
        w.write_record([
            "P3".to_string(),
            i.to_string(),
            r.result.delta.to_string(),
            r.report.p3_relative_excess.to_string(),
            r.pass().to_string(),
        ])
        .map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;
    let slope = decay_sweep(&points);
    write_json(&out.join("sweep.json"), &json!({ "property": "P3", "points": points, "s_estimate": slope, "pass": pass }))?;
    match slope {
        Some(s) => println!("s_estimate = {s}"),
        None => println!("s_estimate undefined"),
    }
    Ok(Outcome::from(pass))
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let (u, jumps) = load(&a.input)?;
    let params = params(&a.model, *u.grid())?;
    let r = run(&u, &jumps, &params, &config(&a.pipeline))?;
    if let Some(dir) = a.report.parent().filter(|d| !d.as_os_str().is_empty()) {
        out_dir(dir)?;
    }
    write_json(&a.report, &r.report_json())?;
    print_checks(&r.report);
    Ok(Outcome::from(r.pass()))
}

pub fn oracle(a: &OracleArgs) -> Result<Outcome, CliError> {
    let (mut problem, candidates) = match a.instance {
        OracleInstance::Exhaustive => exhaustive_instance(a.seed)?,
        OracleInstance::Plane => plane_crack_problem(a.m, 0.05, a.seed)?,
    };
    if let Some(b) = a.beta {
        problem.params.beta = b;
    }
    out_dir(&a.out)?;
    let result = brute_force_minimize(&problem, &candidates, a.heuristic)?;
    let greedy = if a.heuristic { None } else { Some(greedy_minimize(&problem, &candidates)?) };
    let jumps = problem.jumps_of(&result.best_config)?;
    let deviation = match &problem.boundary {
        Boundary::Inside { region, .. } => {
            Some(deviation_psi0(&result.minimizer_u, &jumps, &problem.params, region, &candidates, a.heuristic)?)
        }
        _ => None,
    };
    let h = problem.grid().h();
    let radii: Vec<f64> = a.radii.iter().map(|&k| k as f64 * h).collect();
    let density = density_lower_bound_check(&result, &problem, &radii)?;

    let csv_path = a.out.join("configs.csv");
    let file = fs::File::create(&csv_path).map_err(io(&csv_path))?;
    result.write_csv(file)?;
    write_field(&a.out.join("minimizer"), &result.minimizer_u)?;
    write_jumps(&a.out.join("minimizer.jumps.json"), &jumps)?;
    let dpath = a.out.join("density.csv");
    let mut w = csv::Writer::from_path(&dpath).map_err(io(&dpath))?;
    w.write_record(["property", "axis", "cell", "x", "y", "z", "rho", "ratio"]).map_err(io(&dpath))?;
    for r in &density.rows {
        for (id, v) in [("density-energy", r.energy_ratio), ("density-jump", r.jump_ratio)] {
            let rec = [id.to_string(), r.axis.to_string(), r.cell.to_string(), r.x.to_string(), r.y.to_string(), r.z.to_string(), r.rho.to_string(), v.to_string()];
            w.write_record(&rec).map_err(io(&dpath))?;
        }
    }
    w.flush().map_err(io(&dpath))?;

    let greedy_agrees = greedy.as_ref().map(|g| {
        (g.result.min_energy - result.min_energy).abs() <= 1e-9 * result.min_energy.abs().max(f64::MIN_POSITIVE)
    });
    let psi0 = deviation.as_ref().map(|d| d.psi0);
    let consistent = result.max_consistency <= 1e-9;
    let minimal = psi0.map_or(true, |p| p.abs() <= 1e-9);
    let density_ok = density.vacuous || density.pass;
    let summary = json!({
        "search": result.summary_json(),
        "greedy_agrees": greedy_agrees,
        "greedy_best_bits": greedy.as_ref().map(|g| g.result.best_config.bits()),
        "deviation": deviation.as_ref().map(|d| d.summary()),
        "density": {
            "vacuous": density.vacuous,
            "radii": density.radii,
            "theta0": if density.vacuous { None } else { Some(density.theta0) },
            "theta1": if density.vacuous { None } else { Some(density.theta1) },
            "pass": density.pass,
        },
        "pass": consistent && minimal && density_ok,
    });
    write_json(&a.out.join("summary.json"), &summary)?;
    println!("best {}  energy {:.10e}", result.best_config.bits(), result.min_energy);
    if let Some(p) = psi0 {
        println!("psi0 of minimizer {p:.3e}");
    }
    if let Some(g) = greedy_agrees {
        println!("greedy agrees: {g}");
    }
    if density.vacuous {
        println!("density: vacuous");
    } else {
        println!("density: theta0 {:.4e}  theta1 {:.4e}", density.theta0, density.theta1);
    }
    Ok(Outcome::from(consistent && minimal && density_ok))
}

pub fn harness(a: &HarnessArgs) -> Result<Outcome, CliError> {
    let generator = match a.generator {
        HarnessGenerator::Smooth => Generator::Smooth,
        HarnessGenerator::ShrinkingCrack => Generator::ShrinkingCrack,
        HarnessGenerator::RigidPatches => Generator::RigidPatches,
    };
    let spec = SequenceSpec { generator, levels: a.levels, seed: a.seed, beta: a.beta, kappa0: a.kappa0 };
    let mut config = HarnessConfig::default();
    config.approx.eta = Some(a.eta);
    let report = vanishing_jump_harness(&spec, &config)?;
    out_dir(&a.out)?;
    let lpath = a.out.join("levels.csv");
    report.write_levels_csv(fs::File::create(&lpath).map_err(io(&lpath))?)?;
    let cpath = a.out.join("checks.csv");
    let mut w = csv::Writer::from_path(&cpath).map_err(io(&cpath))?;
    w.write_record(["property", "t", "level", "value", "bound", "pass"]).map_err(io(&cpath))?;
    for s in &report.semicontinuity {
        let rec = ["semicontinuity".to_string(), s.t.to_string(), String::new(), s.limit_energy.to_string(), (s.min_energy + s.slack).to_string(), s.pass.to_string()];
        w.write_record(&rec).map_err(io(&cpath))?;
    }
    for d in &report.surface_decay {
        let rec = ["surface-decay".to_string(), d.t.to_string(), d.level.to_string(), d.ratio.to_string(), "2".to_string(), d.pass.to_string()];
        w.write_record(&rec).map_err(io(&cpath))?;
    }
    w.flush().map_err(io(&cpath))?;
    let value = serde_json::to_value(&report).map_err(io(&a.out))?;
    write_json(&a.out.join("report.json"), &value)?;
    for l in report.levels.iter().filter(|l| l.skipped.is_some()) {
        println!("level {} skipped: {}", l.level, l.skipped.as_deref().unwrap_or_default());
    }
    for s in &report.semicontinuity {
        println!("semicontinuity t={} {}", s.t, if s.pass { "pass" } else { "FAIL" });
    }
    println!("surface decay {}", if report.surface_decay.iter().all(|d| d.pass) { "pass" } else { "FAIL" });
    Ok(Outcome::from(report.pass))
}
