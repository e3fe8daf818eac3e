use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use leadtime_lab::config::{RunConfig, Stage};
use leadtime_lab::pipeline;

#[derive(Parser)]
#[command(
    name = "leadtime-lab",
    version,
    about = "Distributional analysis of daily lead-time composition panels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run analysis stages over a panel CSV (or a scenario, with the
    /// simulate stage) and write per-stage reports plus a manifest.
    Run(RunArgs),
    /// Generate a synthetic panel CSV from a scenario JSON file.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Panel CSV, or scenario JSON when the stage list includes `simulate`.
    #[arg(long)]
    input: PathBuf,
    /// Output directory for reports, plot data, and the manifest.
    #[arg(long)]
    output: PathBuf,
    /// Comma-separated stages to run.
    #[arg(long, value_delimiter = ',', required = true)]
    stages: Vec<Stage>,
    /// Seed for every stochastic stage (default 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Thresholds (days) for the tail-mass ratio report.
    #[arg(long = "tail-thresholds", value_delimiter = ',')]
    tail_thresholds: Option<Vec<usize>>,
    /// Thresholds (days) for the GPD stability sweep.
    #[arg(long = "gpd-thresholds", value_delimiter = ',')]
    gpd_thresholds: Option<Vec<usize>>,
    /// Block-bootstrap replicates for the divergence summary.
    #[arg(long)]
    replicates: Option<usize>,
    /// Maximum number of structural breaks.
    #[arg(long = "max-breaks")]
    max_breaks: Option<usize>,
    /// Trimming fraction: minimum segment share of the sample.
    #[arg(long)]
    trim: Option<f64>,
    /// Synthetic draws per day feeding the GPD stage.
    #[arg(long = "draws-per-day")]
    draws_per_day: Option<usize>,
    /// Disable within-bin jitter on synthetic lead draws.
    #[arg(long = "no-jitter")]
    no_jitter: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output panel CSV path.
    #[arg(long)]
    output: PathBuf,
    /// Overrides the scenario file's seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn configure_threads() {
    if let Ok(value) = std::env::var("LEADTIME_LAB_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let mut config = RunConfig::new(args.input, args.output, args.stages);
            config.simulate_seed = args.seed;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            if let Some(v) = args.tail_thresholds {
                config.tail_thresholds = v;
            }
            if let Some(v) = args.gpd_thresholds {
                config.gpd_thresholds = v;
            }
            if let Some(v) = args.replicates {
                config.bootstrap_replicates = v;
            }
            if let Some(v) = args.max_breaks {
                config.max_breaks = v;
            }
            if let Some(v) = args.trim {
                config.trim = v;
            }
            if let Some(v) = args.draws_per_day {
                config.draws_per_day = v;
            }
            config.jitter = !args.no_jitter;
            match pipeline::run(&config) {
                Ok(summary) => {
                    println!(
                        "ran {} stage(s) over {} day(s); wrote {} file(s) to {}",
                        summary.manifest.stages.len(),
                        summary.manifest.panel_days,
                        summary.manifest.outputs.len() + 1,
                        config.output_dir.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    ExitCode::from(err.exit_code() as u8)
                }
            }
        }
        Command::Simulate(args) => {
            match pipeline::simulate_to_csv(&args.scenario, &args.output, args.seed) {
                Ok(days) => {
                    println!("wrote {days} day(s) to {}", args.output.display());
                    ExitCode::SUCCESS
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    ExitCode::from(err.exit_code() as u8)
                }
            }
        }
    }
}
