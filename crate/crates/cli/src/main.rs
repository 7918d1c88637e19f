//! `fentropy`: topological feature entropy of exported CNN activations.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal
//! invariant violation.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use feature_entropy::analysis::Direction;
use feature_entropy::synthetic::SyntheticKind;
use feature_entropy::{Characterization, EntropyConfig, LogBase, ReportConfig};

use commands::{Indicator, SyntheticArgs};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
    Invariant(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Invariant(_) | CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<feature_entropy::Error> for CliError {
    fn from(e: feature_entropy::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LogBaseArg {
    #[value(name = "e")]
    E,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CharacterizationArg {
    BirthTime,
    MaximumRank,
    Integral,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Ascending,
    Descending,
}

#[derive(Parser)]
#[command(name = "fentropy", version, about = "Topological feature entropy of CNN units")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Dataset manifest (file or directory holding manifest.json).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Comma-separated class ids; all classes when omitted.
    #[arg(long, global = true, value_delimiter = ',')]
    classes: Vec<String>,
    /// Comma-separated layer ids; all layers when omitted.
    #[arg(long, global = true, value_delimiter = ',')]
    layers: Vec<String>,
    /// Homology degree (0 or 1).
    #[arg(long, global = true, default_value_t = 1)]
    k: usize,
    /// Selective-rate threshold below which entropy is (1 − ε)·log N.
    #[arg(long, global = true, default_value_t = feature_entropy::indicators::DEFAULT_SELECTIVE_THRESHOLD)]
    p: f64,
    #[arg(long = "log-base", global = true, value_enum, default_value = "e")]
    log_base: LogBaseArg,
    /// How each unit's Betti curve is summarized.
    #[arg(long, global = true, value_enum, default_value = "birth-time")]
    characterization: CharacterizationArg,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Per-unit indicator table for every class, layer and channel.
    Analyze,
    /// Mean feature entropy and selective rate per layer.
    LayerSummary,
    /// Per-class (feature entropy, selective rate) points per channel.
    Scatter {
        #[arg(long)]
        channel: Option<usize>,
    },
    /// Channel ranking by a class-averaged indicator.
    Rank {
        #[arg(long, value_enum, default_value = "feature-entropy")]
        indicator: Indicator,
        #[arg(long, value_enum, default_value = "ascending")]
        direction: DirectionArg,
    },
    /// Cumulative channel-removal sets following a ranking.
    AblationPlan {
        #[arg(long, value_enum, default_value = "feature-entropy")]
        indicator: Indicator,
        #[arg(long, value_enum, default_value = "ascending")]
        direction: DirectionArg,
        /// Number of removal steps; all channels when omitted.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Keep/drop sets by fused score H̄/ε̄.
    PrunePlan {
        /// Fraction of channels to drop, in (0, 1).
        #[arg(long)]
        ratio: f64,
    },
    /// Feature-entropy spread over random subsamples.
    SampleSize {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        channel: usize,
    },
    /// Writes a synthetic dataset (one class per kind) to --out.
    Synthetic {
        #[arg(long, value_delimiter = ',', default_value = "planted_cycle,uniform_random")]
        kinds: Vec<SyntheticKind>,
        #[arg(long, default_value_t = 14)]
        side: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        channels: usize,
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
    },
    /// Compares the incremental homology engine with the brute-force oracle.
    OracleCheck {
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, default_value_t = 8)]
        max_vertices: usize,
    },
    /// Indicators before and after multiplying activations by --factor.
    RescaleCheck {
        #[arg(long, default_value_t = 0.5)]
        factor: f64,
    },
}

pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub classes: Vec<String>,
    pub layers: Vec<String>,
    pub k: usize,
    pub entropy: EntropyConfig,
    pub characterization: Characterization,
    pub out: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn report(&self) -> ReportConfig {
        ReportConfig {
            k: self.k,
            entropy: self.entropy,
            characterization: self.characterization,
        }
    }
}

fn config(args: RunArgs) -> Result<(RunConfig, Option<usize>), CliError> {
    let cfg = RunConfig {
        manifest: args.manifest,
        classes: args.classes,
        layers: args.layers,
        k: args.k,
        entropy: EntropyConfig {
            threshold: args.p,
            base: match args.log_base {
                LogBaseArg::E => LogBase::Natural,
                LogBaseArg::Two => LogBase::Two,
            },
        },
        characterization: match args.characterization {
            CharacterizationArg::BirthTime => Characterization::BirthTime,
            CharacterizationArg::MaximumRank => Characterization::MaximumRank,
            CharacterizationArg::Integral => Characterization::Integral,
        },
        out: args.out,
        seed: args.seed,
    };
    cfg.report().validate()?;
    if args.jobs == Some(0) {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }
    Ok((cfg, args.jobs))
}

fn direction(d: DirectionArg) -> Direction {
    match d {
        DirectionArg::Ascending => Direction::Ascending,
        DirectionArg::Descending => Direction::Descending,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (cfg, jobs) = config(cli.run)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Internal(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Analyze => commands::analyze(&cfg),
        Command::LayerSummary => commands::summary(&cfg),
        Command::Scatter { channel } => commands::scatter(&cfg, channel),
        Command::Rank { indicator, direction: d } => commands::rank(&cfg, indicator, direction(d)),
        Command::AblationPlan {
            indicator,
            direction: d,
            steps,
        } => commands::ablation(&cfg, indicator, direction(d), steps),
        Command::PrunePlan { ratio } => commands::prune(&cfg, ratio),
        Command::SampleSize { sizes, trials, channel } => commands::sample_size(&cfg, &sizes, trials, channel),
        Command::Synthetic {
            kinds,
            side,
            samples,
            channels,
            noise,
        } => commands::synthetic(
            &cfg,
            &SyntheticArgs {
                kinds: &kinds,
                side,
                samples,
                channels,
                noise,
            },
        ),
        Command::OracleCheck {
            instances,
            max_vertices,
        } => commands::oracle_check(&cfg, instances, max_vertices),
        Command::RescaleCheck { factor } => commands::rescale_check(&cfg, factor),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fentropy: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
