use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use werner_tomo::experiment::{
    correlation_file_name, eta_grid, run_correlation, run_simulate, run_single, run_sweep,
    summarize, summary_csv, sweep_csv, SweepConfig,
};
use werner_tomo::reconstruct::EstimatorConfig;
use werner_tomo::simulate::{CountMode, CountsFile, RandomSource};
use werner_tomo::states::WernerParameter;
use werner_tomo::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

/// Tomography of two-qubit Werner states from simulated SIC-POVM counts.
#[derive(Parser, Debug)]
#[command(name = "werner-tomo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate, reconstruct and score Werner states over a grid of eta and pair counts.
    Sweep(SweepArgs),
    /// Polarization correlation scans with one analyzer fixed at horizontal.
    Correlate(CorrelateArgs),
    /// Write one simulated counts file.
    Simulate(SimulateArgs),
    /// Reconstruct the state behind a counts file and write it as JSON.
    Reconstruct(ReconstructArgs),
}

#[derive(Args, Debug)]
struct EstimatorArgs {
    /// Simplex runs per estimate.
    #[arg(long, default_value_t = EstimatorConfig::default().restarts)]
    restarts: usize,
    /// Evaluation budget per run.
    #[arg(long, default_value_t = EstimatorConfig::default().max_evaluations)]
    max_evals: usize,
    /// Lower bound on the expected count in each chi-squared denominator.
    #[arg(long, default_value_t = EstimatorConfig::default().denominator_floor)]
    floor: f64,
}

impl EstimatorArgs {
    fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            restarts: self.restarts,
            max_evaluations: self.max_evals,
            denominator_floor: self.floor,
            ..EstimatorConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sweep CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    eta_start: f64,
    #[arg(long, default_value_t = 1.0)]
    eta_end: f64,
    #[arg(long, default_value_t = 0.02)]
    eta_step: f64,
    /// Mean pair counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    pairs: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// One trial per cell.
    #[arg(long)]
    paper_mode: bool,
    /// Also write per-cell mean, min and max to this CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    estimator: EstimatorArgs,
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving one CSV per (eta, pairs) scan.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Singlet weights, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
    eta: Vec<f64>,
    /// Mean pair counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    pairs: Vec<f64>,
    /// Analyzer step in degrees over 0..=360.
    #[arg(long, default_value_t = 5.0)]
    angle_step: f64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Counts CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 1000.0)]
    pairs: f64,
    /// Round counts half to even instead of keeping them real.
    #[arg(long)]
    rounded: bool,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Counts CSV as written by `simulate`.
    #[arg(long)]
    counts: PathBuf,
    /// State JSON; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report fidelity, purity and concurrence against this Werner state.
    #[arg(long)]
    reference_eta: Option<f64>,
    /// Seed for restart perturbations.
    #[arg(long, default_value_t = EstimatorConfig::default().seed)]
    seed: u64,
    #[command(flatten)]
    estimator: EstimatorArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Parse { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn run(command: Command) -> werner_tomo::Result<ExitCode> {
    match command {
        Command::Sweep(args) => sweep(args),
        Command::Correlate(args) => correlate(args),
        Command::Simulate(args) => simulate(args),
        Command::Reconstruct(args) => reconstruct(args),
    }
}

fn sweep(args: SweepArgs) -> werner_tomo::Result<ExitCode> {
    let config = SweepConfig {
        eta_grid: eta_grid(args.eta_start, args.eta_end, args.eta_step)?,
        mean_pairs_list: args.pairs,
        trials: if args.paper_mode { 1 } else { args.trials },
        seed: args.seed,
        estimator: args.estimator.config(),
    };
    let records = run_sweep(&config)?;
    emit(args.out.as_deref(), &sweep_csv(&records))?;
    if let Some(path) = args.summary {
        fs::write(path, summary_csv(&summarize(&records)))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn correlate(args: CorrelateArgs) -> werner_tomo::Result<ExitCode> {
    fs::create_dir_all(&args.out)?;
    for (e, &eta) in args.eta.iter().enumerate() {
        let eta_param = WernerParameter::new(eta)?;
        for (n, &pairs) in args.pairs.iter().enumerate() {
            // Each scan gets its own stream so the curves are independent.
            let seed = RandomSource::derive(args.seed, &[e as u64, n as u64]).next_u64();
            let scan = run_correlation(eta_param, pairs, args.angle_step, seed)?;
            fs::write(
                args.out.join(correlation_file_name(eta, pairs)),
                scan.to_csv(),
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(args: SimulateArgs) -> werner_tomo::Result<ExitCode> {
    let mode = if args.rounded {
        CountMode::Rounded
    } else {
        CountMode::Real
    };
    let file = run_simulate(WernerParameter::new(args.eta)?, args.pairs, args.seed, mode)?;
    emit(args.out.as_deref(), &file.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

fn reconstruct(args: ReconstructArgs) -> werner_tomo::Result<ExitCode> {
    let text = fs::read_to_string(&args.counts)?;
    let counts = CountsFile::parse(&text)?;
    let reference = args.reference_eta.map(WernerParameter::new).transpose()?;
    let config = EstimatorConfig {
        seed: args.seed,
        ..args.estimator.config()
    };
    let report = run_single(&counts, &config, reference)?;
    emit(args.out.as_deref(), &report.to_json()?)?;
    Ok(if report.converged {
        ExitCode::SUCCESS
    } else {
        eprintln!("warning: estimator did not converge");
        ExitCode::from(EXIT_NOT_CONVERGED)
    })
}

fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}
