//! `uodf`: ground truth, training, prediction, reconstruction, baselines,
//! evaluation and benchmarks from the command line.
//!
//! Every run writes a JSON manifest next to its outputs. `UODF_THREADS` caps
//! the worker count. Exit codes: 0 ok, 1 internal, 2 bad input, 3 bad
//! configuration or usage.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use uodf::gep::DEFAULT_TAU;
use uodf::Direction;

use crate::commands::RunRecord;
use crate::error::{config_error, Class, CliResult};
use crate::manifest::{hash_file, sha256_hex, versions, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "uodf", version, about = "Unsigned orthogonal distance fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact UODFs (lr, fb, ud), UDF and, for closed shapes, SDF grids.
    Gt(GtArgs),
    /// Train the network for one direction on a ground-truth UODF file.
    Fit(FitArgs),
    /// Evaluate a checkpoint on a lattice and write a UODF file.
    Predict(PredictArgs),
    /// Grid-edge points from three UODF files or checkpoints.
    Recon(ReconArgs),
    /// Edge-interpolation points from an SDF (marching cubes) or UDF (gradient sign) grid.
    Baseline(BaselineArgs),
    /// Chamfer distance of a point file against a shape.
    Eval(EvalArgs),
    /// Resolution sweep of the exact-field methods, written as CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    /// Triangle mesh (OBJ or PLY); normalized into the unit cube.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Built-in shape: sphere, plates, slab, blob or shells.
    #[arg(long)]
    pub fixture: Option<String>,
    /// Treat the mesh as closed and also write an SDF grid.
    #[arg(long)]
    pub watertight: bool,
}

#[derive(Debug, Args)]
pub struct ReferenceArgs {
    /// Chamfer reference: ground-truth (exact lattice crossings) or samples.
    #[arg(long, default_value = "ground-truth")]
    pub reference: String,
    /// Surface sample count for --reference samples.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub sample_seed: u64,
}

#[derive(Debug, Args)]
pub struct GtArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Corners per axis.
    #[arg(long, short)]
    pub resolution: usize,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Ground-truth UODF file from `gt`.
    #[arg(long)]
    pub field: PathBuf,
    /// Expected direction of the field; checked against the file.
    #[arg(long)]
    pub direction: Option<Direction>,
    /// JSON training configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Checkpoint path; a JSON sidecar and an epoch log are written beside it.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Training lattice; defaults to the field's resolution.
    #[arg(long)]
    pub lattice: Option<usize>,
    /// Train only the rays whose second plane coordinate equals this value.
    #[arg(long, allow_hyphen_values = true)]
    pub slice: Option<f64>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, short)]
    pub resolution: usize,
    /// Mask probability above which a ray counts as hitting the shape.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub slice: Option<f64>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconArgs {
    /// Three UODF files, one per direction, in any order.
    #[arg(long, num_args = 3)]
    pub fields: Vec<PathBuf>,
    /// Three checkpoints, one per direction, evaluated at --resolution.
    #[arg(long, num_args = 3)]
    pub checkpoints: Vec<PathBuf>,
    #[arg(long, short)]
    pub resolution: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Merge distance for estimates on one ray.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    /// Point output, .ply (with normals) or .xyz.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Evaluation report (JSON); needs --mesh or --fixture.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Point counts and settings (JSON), when no report is requested.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// SDF or UDF grid from `gt`.
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Points to evaluate (.ply or .xyz).
    #[arg(long)]
    pub points: PathBuf,
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Lattice the points were reconstructed on.
    #[arg(long, short)]
    pub resolution: usize,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    /// Comma-separated: uodf_exact, mc_sdf_exact, udf_gradsign_exact (default all).
    #[arg(long)]
    pub methods: Option<String>,
    /// Comma-separated resolutions, e.g. 33,65,129.
    #[arg(long)]
    pub resolutions: String,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    /// CSV output.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gt(_) => "gt",
            Command::Fit(_) => "fit",
            Command::Predict(_) => "predict",
            Command::Recon(_) => "recon",
            Command::Baseline(_) => "baseline",
            Command::Eval(_) => "eval",
            Command::Bench(_) => "bench",
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(text) = std::env::var("UODF_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| config_error(format!("UODF_THREADS must be a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| config_error(format!("cannot start {n} worker threads: {e}")))
}

fn run(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    let start = Instant::now();
    let mut rec = RunRecord::default();
    match &cli.command {
        Command::Gt(a) => commands::gt(a, &mut rec)?,
        Command::Fit(a) => commands::fit(a, &mut rec)?,
        Command::Predict(a) => commands::predict(a, &mut rec)?,
        Command::Recon(a) => commands::recon(a, &mut rec)?,
        Command::Baseline(a) => commands::baseline(a, &mut rec)?,
        Command::Eval(a) => commands::eval(a, &mut rec)?,
        Command::Bench(a) => commands::bench(a, &mut rec)?,
    }
    let config_json = serde_json::to_vec(&rec.config).expect("JSON values always serialize");
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        args: std::env::args().skip(1).collect(),
        config_hash: sha256_hex(&config_json),
        config: rec.config,
        inputs: rec.inputs.iter().map(|p| hash_file(p)).collect::<CliResult<_>>()?,
        seed: rec.seed,
        versions: versions(),
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: rec.outputs,
        warnings: rec.warnings,
    };
    manifest.write(&rec.manifest)?;
    log::info!("manifest written to {}", rec.manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(Class::Config.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.class.exit_code() as u8)
        }
    }
}
