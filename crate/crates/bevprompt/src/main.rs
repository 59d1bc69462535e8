//! The `bevprompt` binary: scene generation, 2D-label derivation, yaw
//! tuning, training, evaluation, sweeps and fusion tracing.

use std::path::PathBuf;
use std::process::ExitCode;

use bevprompt::errors::classify;
use bevprompt::runner;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bevprompt",
    version,
    about = "Prompted roadside monocular 3D detection toolkit"
)]
struct Cli {
    /// Worker threads for per-frame parallel stages (results are
    /// order-deterministic for any value).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene set plus simulated 2D/3D detections.
    SynthGen {
        /// Scene + detector-noise config (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project 3D cuboid annotations into 2D box annotations.
    #[command(name = "derive-2d")]
    Derive2d {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        calib: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep full (unclipped) hulls instead of image-clipped boxes.
        #[arg(long)]
        unclipped: bool,
    },
    /// Refine detection yaws against matched 2D boxes.
    TuneYaw {
        #[arg(long)]
        det3d: PathBuf,
        #[arg(long)]
        det2d: PathBuf,
        #[arg(long)]
        calib: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the prompted model (and the unprompted baseline) on a
    /// generated dataset directory.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset directory from synth-gen (calib.json, gt.jsonl,
        /// det2d.jsonl).
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate 3D (and optionally 2D) detections against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        det3d: PathBuf,
        #[arg(long)]
        det2d: Option<PathBuf>,
        #[arg(long)]
        calib: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Directory for per-class PR-curve CSV exports.
        #[arg(long)]
        pr_csv: Option<PathBuf>,
    },
    /// Train across a ladder of 2D-detector noise levels and report the
    /// 2D-quality vs 3D-error trend.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one fusion pass from a checkpoint and dump the per-step tensors.
    FuseTrace {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Stacked prompt tokens (tensor .json or .bptn).
        #[arg(long)]
        prompts: PathBuf,
        /// Raw image feature (tensor .json or .bptn).
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        grid_h: Option<usize>,
        #[arg(long)]
        grid_w: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Benchmarks over the repo's standard synthetic setup.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BenchArgs {
    #[command(subcommand)]
    which: BenchCommand,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Prompted vs unprompted (and predicted vs ground-truth prompts),
    /// printed as a markdown table.
    Prompts {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let threads = cli.threads;
    match cli.command {
        Command::SynthGen { config, out } => {
            runner::synth_gen::run(config.as_deref(), &out, threads)
        }
        Command::Derive2d {
            gt,
            calib,
            out,
            unclipped,
        } => runner::derive2d::run(&gt, &calib, &out, !unclipped, threads),
        Command::TuneYaw {
            det3d,
            det2d,
            calib,
            config,
            out,
        } => runner::tune_yaw::run(&det3d, &det2d, &calib, config.as_deref(), &out, threads),
        Command::Train { config, data, out } => {
            runner::train::run(config.as_deref(), &data, &out, threads)
        }
        Command::Eval {
            gt,
            det3d,
            det2d,
            calib,
            config,
            report,
            pr_csv,
        } => runner::eval::run(
            &gt,
            &det3d,
            det2d.as_deref(),
            &calib,
            config.as_deref(),
            &report,
            pr_csv.as_deref(),
            threads,
        ),
        Command::Sweep { config, out } => runner::sweep::run(&config, &out, threads),
        Command::FuseTrace {
            checkpoint,
            prompts,
            image,
            grid_h,
            grid_w,
            out,
        } => runner::fuse_trace::run(
            &checkpoint,
            &prompts,
            &image,
            grid_h,
            grid_w,
            &out,
            threads,
        ),
        Command::Bench(args) => match args.which {
            BenchCommand::Prompts { config, out } => {
                runner::bench::run_prompts(config.as_deref(), out.as_deref(), threads)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = classify(&err);
            let doc = serde_json::json!({
                "error": {
                    "kind": kind.as_str(),
                    "message": format!("{err:#}"),
                }
            });
            eprintln!("{doc}");
            ExitCode::from(kind.exit_code() as u8)
        }
    }
}
