use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use jsampler::experiment::{self, ExperimentConfig, ExperimentError, ExperimentKind, OutputFormat};

#[derive(Parser)]
#[command(
    name = "jsampler",
    version,
    about = "Qubit-chain sampler simulations and metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// State and information fidelity under depolarizing noise.
    Fidelity(Common),
    /// Ideal and measured output distributions.
    Sampling(Common),
    /// Single-qubit entanglement measures versus depth.
    Entanglement(Common),
    /// Out-of-time-order correlators and the WVVW ratio.
    Otoc(Common),
    /// Porter-Thomas histograms and output entropy.
    PtHist(Common),
    /// Monte-Carlo Haar references for the entanglement measures.
    HaarOracle(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::Fidelity(c) => (ExperimentKind::Fidelity, c),
            Command::Sampling(c) => (ExperimentKind::Sampling, c),
            Command::Entanglement(c) => (ExperimentKind::Entanglement, c),
            Command::Otoc(c) => (ExperimentKind::Otoc, c),
            Command::PtHist(c) => (ExperimentKind::PtHist, c),
            Command::HaarOracle(c) => (ExperimentKind::HaarOracle, c),
        }
    }
}

fn execute(kind: ExperimentKind, args: Common) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut config = ExperimentConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(out) = args.out {
        config.output = out;
    }
    if let Some(format) = args.format {
        config.format = match format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    config.validate(kind)?;
    let pool = match args.threads {
        Some(0) => {
            return Err(ExperimentError::Config(vec![
                "--threads: must be at least 1".into(),
            ]))
        }
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t),
        None => rayon::ThreadPoolBuilder::new(),
    }
    .build()
    .map_err(|e| ExperimentError::Config(vec![format!("--threads: {e}")]))?;
    let tables = pool.install(|| experiment::run(kind, &config))?;
    experiment::write_outputs(kind, &config, &tables)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (kind, args) = Cli::parse().command.split();
    match execute(kind, args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("jsampler {kind}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
