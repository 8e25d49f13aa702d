//! `griffith`: synthetic inputs, the approximation pipeline with its
//! property checks, oracle experiments and vanishing-jump sequences.
//!
//! Exit codes: 0 when every check passes, 1 on infrastructure errors, 2 when
//! the input is outside the approximation regime, 3 when a check fails.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "griffith", version, about = "Small-jump approximation and Griffith energy experiments")]
struct Cli {
    /// Worker threads; all cores when unset.
    #[arg(long, global = true, env = "GRIFFITH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic field and its jump set.
    Gen(GenArgs),
    /// Approximate a field and write the result with its property report.
    Approx(ApproxArgs),
    /// Approximate a field and write only the property report.
    Verify(VerifyArgs),
    /// Minimize the Griffith energy over crack configurations.
    Oracle(OracleArgs),
    /// Run a vanishing-jump sequence.
    Harness(HarnessArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum GenSpec {
    Rigid,
    SmoothSinusoid,
    TwoMotionCrack,
    RandomCracks,
    RigidPatches,
    ShrinkingCrack,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(value_enum)]
    spec: GenSpec,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Cells per side.
    #[arg(short = 'm', long = "cells", default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Crack area for `two-motion-crack`.
    #[arg(long, default_value_t = 0.01)]
    area: f64,
    /// Number of cracks for `random-cracks`.
    #[arg(long, default_value_t = 2)]
    count: usize,
    /// Largest tangential crack extent in cells for `random-cracks`.
    #[arg(long, default_value_t = 4)]
    max_size: usize,
    /// Level for `rigid-patches` and `shrinking-crack`.
    #[arg(long, default_value_t = 0)]
    level: u32,
    /// Regime threshold used for the printed check.
    #[arg(long)]
    eta: Option<f64>,
    /// Output stem; writes `<stem>.json`, `<stem>.bin` and `<stem>.jumps.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// Field header written by `gen`.
    #[arg(long)]
    field: PathBuf,
    /// Jump set file; empty when omitted.
    #[arg(long)]
    jumps: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct Model {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Args, Debug, Clone)]
struct Pipeline {
    /// Regime threshold; the default derives from `c_*`.
    #[arg(long)]
    eta: Option<f64>,
    /// Covering scale.
    #[arg(long)]
    delta: Option<f64>,
    /// Smallest cube side in cells.
    #[arg(long)]
    min_side: Option<usize>,
    /// Exceptional-set constant.
    #[arg(long)]
    c_star: Option<f64>,
}

#[derive(Args, Debug)]
struct ApproxArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    model: Model,
    #[command(flatten)]
    pipeline: Pipeline,
    /// Run `δ_k = 2^{−k} δ₀` for `k < K` instead of a single scale.
    #[arg(long, value_name = "K")]
    sweep: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    model: Model,
    #[command(flatten)]
    pipeline: Pipeline,
    #[arg(long)]
    report: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OracleInstance {
    /// Rigid data with a jump on the boundary ring, at most 14 candidates.
    Exhaustive,
    /// Fidelity to two motions split by the mid line, which is the candidate set.
    Plane,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(value_enum)]
    instance: OracleInstance,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cells per side for `plane`.
    #[arg(short = 'm', long = "cells", default_value_t = 8)]
    m: usize,
    /// Surface weight; the instance default when unset.
    #[arg(long)]
    beta: Option<f64>,
    /// Greedy search instead of enumeration.
    #[arg(long)]
    heuristic: bool,
    /// Ball radii in cells for the density check.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    radii: Vec<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum HarnessGenerator {
    Smooth,
    ShrinkingCrack,
    RigidPatches,
}

#[derive(Args, Debug)]
struct HarnessArgs {
    #[arg(value_enum)]
    generator: HarnessGenerator,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa0: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Approx(a) => commands::approx(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Harness(a) => commands::harness(&a),
    };
    match outcome {
        Ok(commands::Outcome::Pass) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Fail) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
