//! Batch front-end for mismatched polar-code analysis: spectrum metrics,
//! robustness sweeps, code construction, and Monte Carlo simulation with
//! machine-readable outputs.
//!
//! Exit codes: 0 success (including expected plus-transform findings),
//! 1 theorem-backed assertion failure, 2 validation error, 3 support
//! overflow, 4 empirical bound violation beyond five standard errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polar_mismatch::evolve::{EvolutionLimits, EvolveError};
use polar_mismatch::exact::parse_rational;
use polar_mismatch::robustness::Variant;

mod commands;
mod manifest;
mod output;

#[derive(Parser)]
#[command(
    name = "polarmc",
    version,
    about = "Polar codes under channel mismatch: exact analysis, construction, verification, simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    /// Tie-inclusive conditions A, B, C.
    Weak,
    /// Tie-exclusive A plus the decision-error difference B.
    Strict,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Weak => Variant::Weak,
            VariantArg::Strict => Variant::Strict,
        }
    }
}

#[derive(Args, Clone)]
struct LimitArgs {
    /// Maximum spectrum support before evolution fails (exact mode) or
    /// quantizes (quantized mode).
    #[arg(long, default_value_t = 1 << 20)]
    max_support: usize,
    /// Quantize spectra to at most this many points after each transform
    /// instead of failing on overflow. Approximate mode; flagged in all
    /// outputs.
    #[arg(long)]
    bins: Option<usize>,
}

impl LimitArgs {
    fn limits(&self) -> EvolutionLimits {
        match self.bins {
            None => EvolutionLimits::exact(self.max_support),
            Some(bins) => EvolutionLimits::quantized(self.max_support, bins),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Per-path metric tables (tie splits, decision error, Bhattacharyya)
    /// for a channel or a mismatched pair.
    Analyze {
        /// Channel JSON file (the metric/design channel).
        #[arg(long)]
        channel: PathBuf,
        /// Optional true-channel JSON; adds the mismatched law rows.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Robustness condition sweep, tie-mass trace, and sign-alignment
    /// report for a channel pair.
    Verify {
        /// True channel JSON.
        #[arg(long, required_unless_present = "counterexample")]
        truth: Option<PathBuf>,
        /// Metric channel JSON.
        #[arg(long, required_unless_present = "counterexample")]
        metric: Option<PathBuf>,
        /// Use the built-in plus-transform counterexample pair instead of
        /// channel files.
        #[arg(long)]
        counterexample: bool,
        #[arg(long, default_value_t = 3)]
        depth: u32,
        #[arg(long, value_enum, default_value_t = VariantArg::Weak)]
        variant: VariantArg,
        #[command(flatten)]
        limits: LimitArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an information set from a design channel.
    Construct {
        /// Design channel JSON.
        #[arg(long)]
        design: PathBuf,
        /// Number of polarization levels; blocklength is 2^n.
        #[arg(long)]
        n: u32,
        /// Information set size.
        #[arg(long, conflicts_with = "target_bound")]
        size: Option<usize>,
        /// Or: largest set whose certified Bhattacharyya sum stays within
        /// this budget (exact rational, e.g. "1/100").
        #[arg(long)]
        target_bound: Option<String>,
        #[command(flatten)]
        limits: LimitArgs,
        /// Output spec JSON path.
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-index CSV table to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Monte Carlo mismatched decoding against the analytic bound.
    Simulate {
        /// True channel JSON.
        #[arg(long)]
        truth: PathBuf,
        /// Metric channel JSON.
        #[arg(long)]
        metric: PathBuf,
        /// Code spec JSON from `construct`.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Decode with log-domain floats at this tie tolerance instead of
        /// exact rationals.
        #[arg(long)]
        float_tie_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-trial CSV trace (trial, bit_errors, ties).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print the built-in counterexample channels and the exact numbers at
    /// blocklength 2.
    Counterexample {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // Rayon pool size from the environment, when requested.
    if let Ok(threads) = std::env::var("POLARMC_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<EvolveError>() {
            if matches!(e, EvolveError::SupportOverflow { .. }) {
                return 3;
            }
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Analyze {
            channel,
            truth,
            depth,
            limits,
            format,
            out,
        } => commands::analyze(channel, truth, depth, limits.limits(), format, out),
        Command::Verify {
            truth,
            metric,
            counterexample,
            depth,
            variant,
            limits,
            format,
            out,
        } => commands::verify(
            truth,
            metric,
            counterexample,
            depth,
            variant.into(),
            limits.limits(),
            format,
            out,
        ),
        Command::Construct {
            design,
            n,
            size,
            target_bound,
            limits,
            out,
            csv,
        } => {
            let target = target_bound
                .map(|t| parse_rational(&t))
                .transpose()
                .map_err(|e| anyhow::anyhow!("--target-bound: {e}"))?;
            commands::construct(design, n, size, target, limits.limits(), out, csv)
        }
        Command::Simulate {
            truth,
            metric,
            spec,
            trials,
            seed,
            float_tie_tol,
            out,
            trace,
        } => commands::simulate(truth, metric, spec, trials, seed, float_tie_tol, out, trace),
        Command::Counterexample { format, out } => commands::counterexample(format, out),
    }
}
