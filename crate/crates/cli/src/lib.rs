//! Argument handling for the `bootperc` binary.
//!
//! Flags mirror the fields of [`ExperimentConfig`]; a JSON file given with
//! `--config` supplies defaults that individual flags override.

use std::path::PathBuf;

use bootperc::engine::ScheduleKind;
use bootperc::experiment::{
    parse_variant, preset, ConfigError, ExperimentConfig, OutputFormat, PMode, PresetOptions,
    Reference, RelaxationRule, ThresholdRule, PRESETS,
};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

/// Variable that sets the worker thread count.
pub const THREADS_ENV: &str = "BOOTPERC_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Parser)]
#[command(
    name = "bootperc",
    version,
    about = "Bootstrap percolation on hypercubes: Monte Carlo estimates, critical-probability searches and presets",
    args_conflicts_with_subcommands = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a named preset.
    Preset(PresetArgs),
    /// Print a 1-factorization of the complete k-uniform hypergraph on n points.
    Factorize(FactorizeArgs),
}

#[derive(Debug, Default, Args)]
#[group(id = "pmode", multiple = false)]
struct PArgs {
    /// A probability, `sweep:START:STOP:POINTS` or `auto-pc`.
    #[arg(long, group = "pmode", allow_hyphen_values = true)]
    p: Option<String>,
    /// Shorthand for `--p sweep:START:STOP:POINTS`.
    #[arg(long, group = "pmode", value_name = "START:STOP:POINTS")]
    sweep: Option<String>,
    /// Shorthand for `--p auto-pc`.
    #[arg(long, group = "pmode")]
    pc: bool,
}

#[derive(Debug, Default, Args)]
struct RunArgs {
    /// JSON file with the same field names as these flags.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Label written to every output row.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    /// Neighborhood radius: edges join vertices at distance 1..=k.
    #[arg(long)]
    k: Option<u32>,
    /// `const:R`, `power:A` (r = ceil(n^A)) or `majority` (r = ceil(N/2)).
    #[arg(long)]
    threshold: Option<String>,
    /// `boot`, `boot1`, `boot2` or `boot3`, optionally followed by `:T`.
    #[arg(long)]
    variant: Option<String>,
    /// An integer, `eps2_na:E`, `half_power:D`, `linear:C` or `k_power:C`.
    #[arg(long)]
    t: Option<String>,
    #[command(flatten)]
    p: PArgs,
    /// Trials per point.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Target bracket width for auto-pc.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Confidence level of the Wilson intervals.
    #[arg(long)]
    confidence: Option<f64>,
    /// Largest accepted dimension.
    #[arg(long)]
    n_max: Option<u32>,
    /// Also record fixpoint-step histograms.
    #[arg(long)]
    profile: bool,
    /// `power_law:A`, `second_order:A:DELTA` or `majority`.
    #[arg(long)]
    reference: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    output: Option<String>,
    /// `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct PresetArgs {
    /// Preset name.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    name: String,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_name = "PATH")]
    output: Option<String>,
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct FactorizeArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    k: u32,
    #[arg(long, value_name = "PATH")]
    output: Option<String>,
}

/// What the command line asks for.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Run(ExperimentConfig),
    Preset {
        configs: Vec<ExperimentConfig>,
        format: OutputFormat,
        output: Option<String>,
    },
    Factorize {
        n: u32,
        k: u32,
        output: Option<String>,
    },
}

/// Parses a full command line (program name first).
pub fn parse_invocation<I, T>(args: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    match cli.command {
        None => Ok(Invocation::Run(build_config(cli.run)?)),
        Some(Command::Preset(a)) => {
            let options = PresetOptions {
                trials: a.trials,
                seed: a.seed,
                tolerance: a.tolerance,
            };
            let format = a
                .format
                .as_deref()
                .map(str::parse)
                .transpose()?
                .unwrap_or_default();
            let mut configs = preset(&a.name, options)?;
            for c in &mut configs {
                c.format = format;
                c.output = a.output.clone();
            }
            Ok(Invocation::Preset {
                configs,
                format,
                output: a.output,
            })
        }
        Some(Command::Factorize(a)) => Ok(Invocation::Factorize {
            n: a.n,
            k: a.k,
            output: a.output,
        }),
    }
}

/// Parses the flags of a single run into a resolved-checked configuration.
pub fn parse_config<I, T>(args: I) -> Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_invocation(args)? {
        Invocation::Run(config) => Ok(config),
        _ => {
            Err(ConfigError::Invalid("expected experiment flags, found a subcommand".into()).into())
        }
    }
}

fn build_config(a: RunArgs) -> Result<ExperimentConfig, CliError> {
    let base = a
        .config
        .as_deref()
        .map(ExperimentConfig::from_json_file)
        .transpose()?;
    let missing = |what: &str| {
        ConfigError::Invalid(format!("missing --{what} (or a config file providing it)"))
    };

    let p_flag = match (&a.p.p, &a.p.sweep, a.p.pc) {
        (Some(p), _, _) => Some(p.parse::<PMode>()?),
        (_, Some(sweep), _) => Some(format!("sweep:{sweep}").parse::<PMode>()?),
        (_, _, true) => Some(PMode::AutoPc),
        _ => None,
    };
    let (variant_flag, inline_t) = match &a.variant {
        Some(v) => {
            let (kind, t) = parse_variant(v)?;
            (Some(kind), t)
        }
        None => (None, None),
    };
    let t_flag = match (&a.t, inline_t) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid("t given both in --variant and in --t".into()).into());
        }
        (Some(t), None) => Some(t.parse::<RelaxationRule>()?),
        (None, t) => t,
    };
    let threshold_flag = a
        .threshold
        .as_deref()
        .map(str::parse::<ThresholdRule>)
        .transpose()?;

    let mut config = match base {
        Some(c) => c,
        None => ExperimentConfig::new(
            a.n.ok_or_else(|| missing("n"))?,
            a.k.unwrap_or(1),
            threshold_flag.ok_or_else(|| missing("threshold"))?,
            variant_flag.unwrap_or(ScheduleKind::Boot),
            None,
            p_flag.ok_or(ConfigError::MissingP)?,
        ),
    };
    if let Some(v) = a.experiment {
        config.experiment = v;
    }
    if let Some(v) = a.n {
        config.n = v;
    }
    if let Some(v) = a.k {
        config.k = v;
    }
    if let Some(v) = threshold_flag {
        config.threshold = v;
    }
    if let Some(v) = variant_flag {
        config.variant = v;
    }
    if let Some(v) = t_flag {
        config.t = Some(v);
    }
    if let Some(v) = p_flag {
        config.p = v;
    }
    if let Some(v) = a.trials {
        config.trials = v;
    }
    if let Some(v) = a.seed {
        config.seed = v;
    }
    if let Some(v) = a.tolerance {
        config.tolerance = v;
    }
    if let Some(v) = a.confidence {
        config.confidence = v;
    }
    if let Some(v) = a.n_max {
        config.n_max = v;
    }
    if a.profile {
        config.profile = true;
    }
    if let Some(v) = a.reference {
        config.reference = Some(v.parse::<Reference>()?);
    }
    if let Some(v) = a.output {
        config.output = Some(v);
    }
    if let Some(v) = a.format {
        config.format = v.parse()?;
    }
    config.resolve()?;
    Ok(config)
}

/// Worker count from [`THREADS_ENV`], if set.
pub fn threads_from_env() -> Result<Option<usize>, ConfigError> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(ConfigError::Invalid(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(ConfigError::Parse {
                field: "thread count",
                value: v,
                reason: "expected a positive integer".into(),
            }),
        },
    }
}
