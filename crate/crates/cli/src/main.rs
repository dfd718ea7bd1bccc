mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Composite a live feed into tracked mirrors and windows of a scene video.
#[derive(Debug, Parser)]
#[command(name = "v2r", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic scene, feed and ground-truth manifest.
    Synth(SynthArgs),
    /// Detect markers in every scene frame.
    Detect(DetectArgs),
    /// Composite a feed into the scene's tracked quads.
    Compose(ComposeArgs),
    /// Estimate a homography from point correspondences.
    Calibrate(CalibrateArgs),
    /// Time the full pipeline on an in-memory synthetic stream.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// 640x480, moving quad, mild noise and blur.
    Default,
    /// 320x240, moving quad, mild noise and blur.
    Small,
    /// 640x480, fixed quad, no noise or blur.
    Static,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; receives scene/, feed/ and manifest.txt.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub frames: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "default")]
    pub preset: Preset,
    /// Additive Gaussian noise sigma (overrides the preset).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Gaussian blur sigma (overrides the preset).
    #[arg(long)]
    pub blur: Option<f64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hit list, one `frame class cx cy score` line per marker.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub feed: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-frame statistics file.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Feed rectification homography file, as written by `calibrate`.
    #[arg(long)]
    pub rectify: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Correspondences, one `x y x' y'` line each.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 640)]
    pub width: usize,
    #[arg(long, default_value_t = 480)]
    pub height: usize,
    #[arg(long, default_value_t = 300)]
    pub frames: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Bad invocations exit 2, everything else that fails exits 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Op(anyhow::Error),
}

impl From<v2r_core::Error> for Failure {
    fn from(e: v2r_core::Error) -> Self {
        Failure::Op(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Op(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Detect(a) => commands::detect(&a),
        Command::Compose(a) => commands::compose(&a),
        Command::Calibrate(a) => commands::calibrate(&a),
        Command::Bench(a) => commands::bench(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Op(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
