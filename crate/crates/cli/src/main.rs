use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use sci_forge::bench::{run_bench, BenchConfig, MASK_DENSITY};
use sci_forge::ops;
use sci_forge::pairs::{gen_training_pairs, PairsConfig};
use sci_forge::plot::plot_psnr_bars;
use sci_forge::selftest::run_selftest;
use sci_forge_core::degrade::ScenarioId;
use sci_forge_core::error::SciError;
use sci_forge_core::gap_tv::GapTvConfig;

#[derive(Parser)]
#[command(
    name = "sci-forge",
    version,
    about = "Coded-aperture video compressive imaging: simulate, encode, reconstruct, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a named degradation scenario to a video
    Degrade(DegradeArgs),
    /// Collapse a chunk of frames into one coded measurement
    Encode(EncodeArgs),
    /// Recover a frame chunk from a measurement and its masks
    Reconstruct(ReconstructArgs),
    /// Score a reconstruction against its reference
    Metrics(MetricsArgs),
    /// Run the full scenario grid and emit CSV, markdown, and a manifest
    Bench(BenchArgs),
    /// Write degraded-measurement / clean-cube training pairs
    GenPairs(PairsArgs),
    /// Network building-block utilities
    Blocks(BlocksArgs),
    /// Render grouped PSNR bars from a benchmark CSV
    Plot(PlotArgs),
}

#[derive(Args)]
struct DegradeArgs {
    /// Frame directory or .scib cube
    #[arg(long)]
    input: PathBuf,
    /// Filename glob used when --input is a directory
    #[arg(long, default_value = "*.pgm")]
    pattern: String,
    /// Scenario name, e.g. clean, motionblur-l2, mixed-l3
    #[arg(long)]
    scenario: String,
    /// Keep every k-th sharp frame as ground truth
    #[arg(long, default_value_t = 1)]
    gt_stride: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_degraded: PathBuf,
    #[arg(long)]
    out_gt: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    /// Frame directory or .scib cube
    #[arg(long)]
    input: PathBuf,
    /// Filename glob used when --input is a directory
    #[arg(long, default_value = "*.pgm")]
    pattern: String,
    /// Frames folded into one measurement
    #[arg(long, default_value_t = 8)]
    cr: usize,
    /// Which full chunk of the input to encode
    #[arg(long, default_value_t = 0)]
    chunk: usize,
    #[arg(long, default_value_t = 0)]
    mask_seed: u64,
    #[arg(long, default_value_t = MASK_DENSITY)]
    mask_density: f64,
    /// Gaussian sigma added to the measurement, normalized units
    #[arg(long, default_value_t = 0.0)]
    meas_noise: f32,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
    #[arg(long)]
    out_meas: PathBuf,
    #[arg(long)]
    out_masks: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    meas: PathBuf,
    #[arg(long)]
    masks: PathBuf,
    /// Outer iterations
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    tv_weight: Option<f32>,
    /// Denoiser iterations per outer step
    #[arg(long)]
    tv_inner: Option<usize>,
    #[arg(long)]
    accelerate: Option<bool>,
    #[arg(long)]
    stop_eps: Option<f32>,
    #[arg(long)]
    out: PathBuf,
    /// Solver report path, defaults next to --out
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON config; flags below override individual fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Frame directory, repeatable; none means the bundled corpus
    #[arg(long = "input-dir")]
    input_dirs: Vec<PathBuf>,
    /// Scenario name, repeatable; none means the full grid
    #[arg(long = "scenario")]
    scenarios: Vec<String>,
    #[arg(long)]
    cr: Option<usize>,
    #[arg(long)]
    mask_seed: Option<u64>,
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    tv_weight: Option<f32>,
    #[arg(long)]
    tv_inner: Option<usize>,
    #[arg(long)]
    accelerate: Option<bool>,
    #[arg(long)]
    stop_eps: Option<f32>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PairsArgs {
    /// JSON config; flags below override individual fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Frame directory, repeatable; none means the bundled corpus
    #[arg(long = "input-dir")]
    input_dirs: Vec<PathBuf>,
    /// Blur window endpoints as lo,hi (odd)
    #[arg(long)]
    n_range: Option<String>,
    /// Darkening gain endpoints as lo,hi
    #[arg(long)]
    alpha_range: Option<String>,
    /// Read-noise sigma endpoints as lo,hi, 8-bit units
    #[arg(long)]
    sigma_range: Option<String>,
    /// Frames per chunk
    #[arg(long)]
    chunk_len: Option<usize>,
    /// Schedule seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mask_seed: Option<u64>,
    #[arg(long)]
    mask_density: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BlocksArgs {
    #[command(subcommand)]
    cmd: BlocksCommand,
}

#[derive(Subcommand)]
enum BlocksCommand {
    /// Check convolution, FFT, attention, and block identities
    Selftest,
}

#[derive(Args)]
struct PlotArgs {
    /// Benchmark results.csv
    #[arg(long)]
    csv: PathBuf,
    /// Output SVG path
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair<T: FromStr + Copy>(text: &str, flag: &str) -> Result<(T, T), SciError> {
    let parts: Vec<&str> = text.split(',').collect();
    let bad = || SciError::InvalidParam(format!("{flag} wants lo,hi, got {text:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let lo = parts[0].trim().parse::<T>().map_err(|_| bad())?;
    let hi = parts[1].trim().parse::<T>().map_err(|_| bad())?;
    Ok((lo, hi))
}

fn load_json_config<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, SciError> {
    let text = std::fs::read_to_string(path).map_err(|e| SciError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn scenario_list(names: &[String]) -> Result<Vec<ScenarioId>, SciError> {
    names.iter().map(|n| n.parse()).collect()
}

fn apply_solver_overrides(
    solver: &mut GapTvConfig,
    iters: Option<usize>,
    tv_weight: Option<f32>,
    tv_inner: Option<usize>,
    accelerate: Option<bool>,
    stop_eps: Option<f32>,
) {
    if let Some(v) = iters {
        solver.outer_iters = v;
    }
    if let Some(v) = tv_weight {
        solver.tv_weight = v;
    }
    if let Some(v) = tv_inner {
        solver.tv_inner_iters = v;
    }
    if let Some(v) = accelerate {
        solver.accelerate = v;
    }
    if let Some(v) = stop_eps {
        solver.stop_eps = v;
    }
}

fn run_bench_cmd(a: BenchArgs) -> Result<ExitCode, SciError> {
    let mut cfg: BenchConfig = match &a.config {
        Some(path) => load_json_config(path)?,
        None => BenchConfig::default(),
    };
    if !a.input_dirs.is_empty() {
        cfg.input_dirs = a.input_dirs.clone();
    }
    if !a.scenarios.is_empty() {
        cfg.scenarios = scenario_list(&a.scenarios)?;
    }
    if let Some(cr) = a.cr {
        cfg.cr = cr;
    }
    if let Some(seed) = a.mask_seed {
        cfg.mask_seed = seed;
    }
    if let Some(seed) = a.data_seed {
        cfg.data_seed = seed;
    }
    apply_solver_overrides(
        &mut cfg.solver,
        a.iters,
        a.tv_weight,
        a.tv_inner,
        a.accelerate,
        a.stop_eps,
    );
    if let Some(dir) = a.out_dir {
        cfg.out_dir = dir;
    }
    let summary = run_bench(&cfg)?;
    println!(
        "{} rows -> {}",
        summary.rows.len(),
        summary.csv_path.display()
    );
    if summary.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} pair(s) failed", summary.failures.len());
        Ok(ExitCode::FAILURE)
    }
}

fn run_pairs_cmd(a: PairsArgs) -> Result<ExitCode, SciError> {
    let mut cfg: PairsConfig = match &a.config {
        Some(path) => load_json_config(path)?,
        None => PairsConfig::default(),
    };
    if !a.input_dirs.is_empty() {
        cfg.input_dirs = a.input_dirs.clone();
    }
    if let Some(text) = &a.n_range {
        cfg.schedule.n_range = parse_pair(text, "--n-range")?;
    }
    if let Some(text) = &a.alpha_range {
        cfg.schedule.alpha_range = parse_pair(text, "--alpha-range")?;
    }
    if let Some(text) = &a.sigma_range {
        cfg.schedule.sigma_range = parse_pair(text, "--sigma-range")?;
    }
    if let Some(v) = a.chunk_len {
        cfg.schedule.chunk_len = v;
    }
    if let Some(v) = a.seed {
        cfg.schedule.seed = v;
    }
    if let Some(v) = a.mask_seed {
        cfg.mask_seed = v;
    }
    if let Some(v) = a.mask_density {
        cfg.mask_density = v;
    }
    if let Some(dir) = a.out_dir {
        cfg.out_dir = dir;
    }
    let summary = gen_training_pairs(&cfg)?;
    println!(
        "{} pair(s) -> {}",
        summary.chunks_written,
        summary.index_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Result<ExitCode, SciError> {
    match cli.cmd {
        Command::Degrade(a) => {
            ops::run_degrade(&ops::DegradeOpts {
                input: a.input,
                pattern: a.pattern,
                scenario: a.scenario.parse()?,
                gt_stride: a.gt_stride,
                seed: a.seed,
                out_degraded: a.out_degraded,
                out_gt: a.out_gt,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Encode(a) => {
            ops::run_encode(&ops::EncodeOpts {
                input: a.input,
                pattern: a.pattern,
                cr: a.cr,
                chunk: a.chunk,
                mask_seed: a.mask_seed,
                mask_density: a.mask_density,
                meas_noise: a.meas_noise,
                noise_seed: a.noise_seed,
                out_meas: a.out_meas,
                out_masks: a.out_masks,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Reconstruct(a) => {
            let mut solver = GapTvConfig::default();
            apply_solver_overrides(
                &mut solver,
                a.iters,
                a.tv_weight,
                a.tv_inner,
                a.accelerate,
                a.stop_eps,
            );
            ops::run_reconstruct(&ops::ReconstructOpts {
                meas: a.meas,
                masks: a.masks,
                solver,
                out: a.out,
                report: a.report,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics(a) => {
            ops::run_metrics(&ops::MetricsOpts {
                reference: a.reference,
                test: a.test,
                out: a.out,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench(a) => run_bench_cmd(a),
        Command::GenPairs(a) => run_pairs_cmd(a),
        Command::Blocks(a) => match a.cmd {
            BlocksCommand::Selftest => {
                if run_selftest() {
                    Ok(ExitCode::SUCCESS)
                } else {
                    Ok(ExitCode::FAILURE)
                }
            }
        },
        Command::Plot(a) => {
            plot_psnr_bars(&a.csv, &a.out)?;
            println!("wrote {}", a.out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
