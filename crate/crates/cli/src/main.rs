use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quadcorr_cli::{run_to_dir, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "quadcorr", version, about = "Correlation estimator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic variance curves.
    Avar(Common),
    /// Probability-limit bias curves under time-varying volatility.
    Tvbias(Common),
    /// Monte Carlo correlation signature plots.
    Signature(Common),
    /// Signature plots with independent jumps and co-jumps.
    Jumps(Common),
    /// Day-averaged rolling intraday correlation, relative volatility and beta.
    Intraday(Common),
    /// Tick-data summary statistics.
    Stats(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides `base_seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(kind: ExperimentKind, args: Common) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    let out = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| anyhow::anyhow!("give --out or set output_dir in the config"))?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let manifest = run_to_dir(kind, &cfg, &out)?;
    for f in &manifest.failures {
        eprintln!("warning: {}: {}", f.unit, f.message);
    }
    println!(
        "{}: wrote {} files to {} in {:.1}s ({} failures)",
        manifest.experiment,
        manifest.outputs.len() + 1,
        out.display(),
        manifest.wall_time_seconds,
        manifest.failures.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Avar(a) => (ExperimentKind::AvarCurves, a),
        Command::Tvbias(a) => (ExperimentKind::TvBiasCurves, a),
        Command::Signature(a) => (ExperimentKind::McSignature, a),
        Command::Jumps(a) => (ExperimentKind::JumpStudy, a),
        Command::Intraday(a) => (ExperimentKind::IntradayAverage, a),
        Command::Stats(a) => (ExperimentKind::SummaryStats, a),
    };
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
