use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use creep_uq_core::pipeline::{Overrides, Pipeline, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(name = "creep-uq", version, about = "Creep rupture-life uncertainty quantification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every stage in sequence.
    Run(Options),
    /// Fit the creep laws and write model.json and cv.csv.
    Fit(Options),
    /// Sobol indices and the Gaussian model of retained parameters.
    Sensitivity(Options),
    /// Monte Carlo rupture-time ensembles per condition.
    Propagate(Options),
    /// AIC/BIC ranking and summary.txt.
    Select(Options),
}

#[derive(Args)]
struct Options {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; every stage seed is derived from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Project a non-PSD covariance onto the PSD cone instead of failing.
    #[arg(long)]
    repair_covariance: bool,
}

fn execute(command: Command) -> Result<(), PipelineError> {
    let (opts, action): (Options, fn(&Pipeline) -> Result<(), PipelineError>) = match command {
        Command::Run(o) => (o, |p| p.run().map(|_| ())),
        Command::Fit(o) => (o, Pipeline::fit),
        Command::Sensitivity(o) => (o, Pipeline::sensitivity),
        Command::Propagate(o) => (o, Pipeline::propagate),
        Command::Select(o) => (o, |p| p.select().map(|_| ())),
    };
    if let Some(n) = opts.threads {
        if n == 0 {
            return Err(PipelineError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| PipelineError::Config(format!("cannot size thread pool: {e}")))?;
    }
    let config = PipelineConfig::load(&opts.config)?;
    let overrides = Overrides {
        out: opts.out,
        seed: opts.seed,
        repair_covariance: opts.repair_covariance,
    };
    let pipeline = Pipeline::new(config, &overrides)?;
    if pipeline.entropy_seed {
        println!("seed: {} (from system entropy; pass --seed to reproduce)", pipeline.seeds.master);
    }
    action(&pipeline)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
