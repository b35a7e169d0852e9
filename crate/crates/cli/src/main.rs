//! `pulsediv`: tuning, evaluation, leakage traces, decomposition checks and the
//! VQE benchmark behind one binary.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical-convergence failure.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "pulsediv", version, about = "Error-divisible two-qubit gate tooling")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    /// Worker threads for parallel evaluations; defaults to the available parallelism.
    #[arg(long, global = true, env = "PULSEDIV_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tune one fractional gate, or the shared parameter set with `--alpha-mode shared`.
    Tune(TuneArgs),
    /// Tune every fraction, envelope and alpha mode of a gate family into a CSV table.
    Sweep(SweepArgs),
    /// Score a waveform JSON against its target gate.
    Evaluate(EvaluateArgs),
    /// Write the |11> excursion `p_out(t)` along a waveform.
    LeakageTrace(TraceArgs),
    /// Run or sweep the adiabatic VQE benchmark.
    Vqe(VqeArgs),
    /// Check the decomposition library against its targets.
    DecomposeCheck,
    /// Turn tables into plot-ready CSV.
    Plotdata(PlotArgs),
}

#[derive(Debug, clap::Args)]
struct TuneArgs {
    #[arg(long, default_value = "iswap")]
    gate: String,
    /// Fraction of the full rotation, e.g. `1/2`. Omit with `--alpha-mode shared` to tune
    /// the shared set over `--fractions`.
    #[arg(long)]
    fraction: Option<String>,
    /// Fractions for the shared-parameter mode.
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<String>>,
    #[arg(long, default_value = "tanh")]
    envelope: String,
    /// free (alpha = 2), positive (alpha = 1) or shared (alpha and c searched).
    #[arg(long, default_value = "free")]
    alpha_mode: String,
    #[arg(long)]
    seed: u64,
    /// Short DE run for smoke testing.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct SweepArgs {
    #[arg(long, default_value = "iswap")]
    gate: String,
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "cosine,tanh")]
    envelopes: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "free,positive")]
    modes: Vec<String>,
    /// Defaults to 1, 3/4, 1/2, 1/4, 1/6, 1/8, 1/12.
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<String>>,
    #[arg(long)]
    quick: bool,
}

#[derive(Debug, clap::Args)]
struct EvaluateArgs {
    #[arg(long, default_value = "iswap")]
    gate: String,
    #[arg(long)]
    waveform: PathBuf,
    /// Target fraction; inferred from `tg_ns` and the full gate time when omitted.
    #[arg(long)]
    fraction: Option<String>,
    /// Integrator step, ns.
    #[arg(long, default_value_t = 0.005)]
    step: f64,
    #[arg(long)]
    dump_waveform: Option<PathBuf>,
    /// Sample spacing of `--dump-waveform`, ns.
    #[arg(long, default_value_t = 0.01)]
    sample_rate: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct TraceArgs {
    #[arg(long)]
    waveform: PathBuf,
    /// Selects the coupler (exchange or quadrature).
    #[arg(long, default_value = "iswap")]
    gate: String,
    /// Integrator step, ns; the run fails unless halving it changes U by under 1e-6.
    #[arg(long, default_value_t = 0.001)]
    step: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct VqeArgs {
    /// Qubit counts; several only with `--sweep`.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    nq: Vec<usize>,
    #[arg(long, default_value = "error-divisible")]
    mode: String,
    /// Modes of a sweep; `all` is stock, continuous and error-divisible.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    modes: Vec<String>,
    #[arg(long)]
    sweep: bool,
    /// Fixed total evolution time; with `--layers`, skips the schedule search.
    #[arg(long = "total-time", short = 'T')]
    total_time: Option<f64>,
    #[arg(long, short = 'N')]
    layers: Option<usize>,
    /// Permit registers above the default size limit.
    #[arg(long)]
    allow_large: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    /// One waveform CSV per tuned row.
    Pulses,
    /// Error against fraction.
    Errors,
    /// Fraction of ground energy per qubit count and mode.
    Vqe,
}

#[derive(Debug, clap::Args)]
struct PlotArgs {
    kind: PlotKind,
    /// Sweep table(s) for pulses/errors, or a VQE sweep CSV.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Output file (errors, vqe) or directory (pulses).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    envelope: Option<String>,
    #[arg(long)]
    alpha_mode: Option<String>,
    #[arg(long, default_value_t = 0.01)]
    sample_rate: f64,
}

/// A tune or propagation that ran but missed its convergence criterion.
#[derive(Debug)]
pub struct Unconverged(pub String);

impl std::fmt::Display for Unconverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "did not converge: {}", self.0)
    }
}

impl std::error::Error for Unconverged {}

fn exit_code(e: &anyhow::Error) -> u8 {
    let numerical = e.chain().any(|c| {
        c.is::<Unconverged>() || matches!(c.downcast_ref::<pulsediv::Error>(), Some(pulsediv::Error::NotConverged { .. }))
    });
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.jobs {
        anyhow::ensure!(n >= 1, "--jobs must be at least 1");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = config::resolve(&cli.overrides)?;
    match cli.command {
        Command::Tune(a) => commands::tune(&cfg, a),
        Command::Sweep(a) => commands::sweep(&cfg, a),
        Command::Evaluate(a) => commands::evaluate(&cfg, a),
        Command::LeakageTrace(a) => commands::leakage_trace(&cfg, a),
        Command::Vqe(a) => commands::vqe(&cfg, a),
        Command::DecomposeCheck => commands::decompose_check(&cfg),
        Command::Plotdata(a) => commands::plotdata(&cfg, a),
    }
}
