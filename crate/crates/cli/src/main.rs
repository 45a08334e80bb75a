//! `forrlab`: seeded experiment runner. Every subcommand writes CSV records
//! (or JSON lines for generated data) and exits 0 on pass, 1 on a failed
//! check or runtime error, 2 on a usage or feasibility error.

mod commands;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use forrlab_core::{Error, ForrParams};

#[derive(Parser, Debug)]
#[command(name = "forrlab", version, about = "Forrelation lab experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed; every record repeats it.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace eps = 1/(50 ln N) with this value.
    #[arg(long)]
    pub eps_override: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gaussian moment checks and the mean forrelation of rounded draws.
    VerifyMoments {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the quantum protocol over a batch of sampled instances.
    RunProtocol {
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Number of instances (half YES-type, half NO-type).
        #[arg(long, default_value_t = 200)]
        samples: u64,
        /// Copies per instance; paper mode derives it when omitted.
        #[arg(long)]
        copies: Option<u64>,
        #[arg(long, value_enum, default_value_t = ProtocolMode::Amplified)]
        mode: ProtocolMode,
        /// Required for paper mode.
        #[arg(long)]
        slow: bool,
        /// Per-instance error target for the derived copy count.
        #[arg(long, default_value_t = 1.0 / 3.0)]
        target_error: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Level-2 audit of random partitions and level-k checks on indicators.
    FourierAudit {
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Number of random partitions.
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 4)]
        max_cost: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Distinguishing advantage of a built-in partition across sizes.
    Advantage {
        #[arg(long, num_args = 1.., default_values_t = [16usize, 64, 256])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, value_enum, default_value_t = PartitionKind::Probe)]
        partition: PartitionKind,
        #[command(flatten)]
        common: Common,
    },
    /// Writes lifted instances as JSON lines.
    GenInstances {
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Number of instances.
        #[arg(long, default_value_t = 10)]
        samples: u64,
        #[arg(long, value_enum, default_value_t = InstanceKind::PlantedYes)]
        mode: InstanceKind,
        #[arg(long, default_value_t = forrlab_core::forrelation::DEFAULT_REJECTION_CAP)]
        max_attempts: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Writes draws from G, D or V as JSON lines.
    SampleDist {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        samples: u64,
        #[arg(long, value_enum, default_value_t = Distribution::G)]
        mode: Distribution,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolMode {
    Amplified,
    Paper,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionKind {
    Probe,
    Trivial,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceKind {
    PlantedYes,
    UniformNo,
    PaperYes,
    PaperNo,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distribution {
    G,
    D,
    V,
}

/// A bad flag combination or an infeasible request.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn params(n: usize, common: &Common) -> anyhow::Result<ForrParams> {
    Ok(match common.eps_override {
        Some(eps) => ForrParams::with_eps_override(n, eps)?,
        None => ForrParams::new(n)?,
    })
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("THREADS") {
        let threads: usize = raw
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| UsageError(format!("THREADS={raw} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::VerifyMoments { n, samples, common } => {
            commands::verify_moments(n, samples, &common)
        }
        Command::RunProtocol {
            n,
            samples,
            copies,
            mode,
            slow,
            target_error,
            common,
        } => commands::run_protocol(n, samples, copies, mode, slow, target_error, &common),
        Command::FourierAudit {
            n,
            samples,
            max_cost,
            common,
        } => commands::fourier_audit(n, samples, max_cost, &common),
        Command::Advantage {
            n,
            samples,
            partition,
            common,
        } => commands::advantage(&n, samples, partition, &common),
        Command::GenInstances {
            n,
            samples,
            mode,
            max_attempts,
            common,
        } => commands::gen_instances(n, samples, mode, max_attempts, &common),
        Command::SampleDist {
            n,
            samples,
            mode,
            common,
        } => commands::sample_dist(n, samples, mode, &common),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidArgument(_) | Error::Resource(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(cli);
    eprintln!("forrlab: wall time {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("forrlab: at least one check failed");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("forrlab: error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
