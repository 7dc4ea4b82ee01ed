//! `tred`: batch driver for synthetic data, density trees, rasters, map
//! extraction, evaluation and benchmarks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tred_core::synth::ShapeSpec;

use crate::config::UsageError;

#[derive(Parser, Debug)]
#[command(
    name = "tred",
    version,
    about = "Robust trajectory density trees and road-map extraction"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Flat key=value file; flags override its keys one for one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; sub-seeds are split from it deterministically.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write seeded synthetic trajectories as CSV plus a manifest.
    Synth(SynthArgs),
    /// Build a tree from trace files and write its dump.
    Build(BuildArgs),
    /// Insert one trace file into a tree dump and rewrite it.
    Update(UpdateArgs),
    /// Write the centers of finest bins above a threshold.
    Sample(SampleArgs),
    /// Write the level-set raster of a tree as PGM.
    Raster(RasterArgs),
    /// Extract a road graph from a directory of GPS traces.
    MapExtract(MapExtractArgs),
    /// Compare a reconstructed road graph with a ground truth.
    MapEval(MapEvalArgs),
    /// Time tree construction against the dense-grid baseline.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// `shape` for closed-curve samples or `grid` for street-grid trips.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    shape: Option<ShapeSpec>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    pts_per_cycle: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    spacing: Option<f64>,
    #[arg(long)]
    trips: Option<usize>,
    #[arg(long)]
    gps_sigma: Option<f64>,
    #[arg(long)]
    sample_period: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// Trace file or directory; omit (with --half-side) for an empty tree.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Column order such as `x y t`, or `auto` to read it from the header.
    #[arg(long)]
    format: Option<String>,
    /// Base square half-side; fitted to the data when absent.
    #[arg(long)]
    half_side: Option<f64>,
    /// Base square center as `x,y` or `x,y,z`.
    #[arg(long)]
    origin: Option<String>,
    #[arg(long)]
    max_depth: Option<u32>,
    #[arg(long)]
    tau: Option<u64>,
    #[arg(long)]
    delta_r: Option<f64>,
    /// Keep clipped segments in the dump so it can be updated later.
    #[arg(long)]
    segments: Option<bool>,
}

#[derive(Args, Debug)]
pub struct UpdateArgs {
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Sampling threshold; defaults to the tree's own.
    #[arg(long)]
    tau: Option<u64>,
}

#[derive(Args, Debug)]
pub struct RasterArgs {
    #[arg(long)]
    tree: Option<PathBuf>,
    #[arg(long)]
    tau: Option<u64>,
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MapExtractArgs {
    /// Directory with one trip per file.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    max_depth: Option<u32>,
    #[arg(long)]
    tau: Option<u64>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Graph file prefix inside the output directory.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args, Debug)]
pub struct MapEvalArgs {
    /// Path prefix of the truth graph files (`<prefix>_vertices.txt`).
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    recon: Option<PathBuf>,
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    snap_radius: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    shape: Option<ShapeSpec>,
    /// Comma-separated cycle counts; each is one input size.
    #[arg(long)]
    cycles: Option<String>,
    #[arg(long)]
    pts_per_cycle: Option<usize>,
    #[arg(long)]
    half_side: Option<f64>,
    #[arg(long)]
    max_depth: Option<u32>,
    #[arg(long)]
    tau: Option<u64>,
    /// TLDE grid side in cells.
    #[arg(long)]
    resolution: Option<usize>,
    /// TLDE disk radius.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    repeats: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut s = config::Settings::load(cli.common.config.as_deref())?;
    let threads = s.opt("threads", cli.common.threads)?;
    if let Some(n) = threads {
        if n == 0 {
            return Err(config::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let c = cli.common;
    match cli.command {
        Command::Synth(a) => commands::synth(&mut s, &c, a),
        Command::Build(a) => commands::build(&mut s, &c, a),
        Command::Update(a) => commands::update(&mut s, &c, a),
        Command::Sample(a) => commands::sample(&mut s, &c, a),
        Command::Raster(a) => commands::raster(&mut s, &c, a),
        Command::MapExtract(a) => commands::map_extract(&mut s, &c, a),
        Command::MapEval(a) => commands::map_eval(&mut s, &c, a),
        Command::Bench(a) => commands::bench(&mut s, &c, a),
    }
}
