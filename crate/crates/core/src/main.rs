use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use parhybrid::bench::{self, BenchError, ExperimentConfig, ExperimentId, TargetSpec};

#[derive(Parser)]
#[command(name = "parhybrid", version, about = "Run hybrid projection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in experiment or a TOML config file.
    Run(RunArgs),
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["config", "experiment"]))]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// example1a, example1b, example2a or example2b.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Distance-to-target tolerance when the experiment has a known solution,
    /// otherwise a tolerance on `||x_{n+1} - x_n||`.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run with one worker and with `--workers`, check the traces match and report the speedup.
    #[arg(long)]
    time_modes: bool,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = match (&args.config, &args.experiment) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(id)) => ExperimentConfig::builtin(id.parse::<ExperimentId>()?)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(n) = args.max_iters {
        cfg.stop.max_iters = n;
    }
    if let Some(tol) = args.tol {
        if cfg.target == TargetSpec::None {
            cfg.stop.residual_tol = Some(tol);
        } else {
            cfg.stop.target_tol = Some(tol);
        }
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<(), BenchError> {
    let cfg = load(args)?;
    let report = if args.time_modes {
        bench::time_modes(&cfg)?
    } else {
        bench::run_experiment(&cfg)?
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report.summary).expect("summary is always serializable")
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("parhybrid: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
