//! Command-line parsing into a validated [`RunManifest`].

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use chenlee::SobolevIndex;

use crate::config::{parse_config, parse_override, Config};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Picard,
    VerifyEstimates,
    InflationScan,
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Picard => "picard",
            Command::VerifyEstimates => "verify-estimates",
            Command::InflationScan => "inflation-scan",
            Command::OracleCheck => "oracle-check",
        }
    }

    fn needs_well_posed_s(self) -> bool {
        matches!(self, Command::Simulate | Command::Picard)
    }
}

#[derive(Debug, Parser)]
#[command(name = "chenlee", version, about = "Chen-Lee solver and estimate lab")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// March random, zero or file data with the exponential integrator.
    Simulate(Common),
    /// Solve the integral equation by Picard iteration.
    Picard(Common),
    /// Run the estimate measurement campaigns.
    VerifyEstimates(Common),
    /// Second-iterate norms of two-mode data over a range of N.
    InflationScan(Shortcuts),
    /// Closed-form second iterate against the quadrature.
    OracleCheck(Shortcuts),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `out-<command>`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override one config key, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct Shortcuts {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    /// Mode `N`; for scans `lo..hi` (dyadic) or a comma list.
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
}

/// A validated invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    /// Overrides in the order they were applied.
    pub overrides: Vec<(String, String)>,
    pub force: bool,
    /// Defaults, then the config file, then the overrides.
    pub config: Config,
}

/// Parses `args` (program name first). Help and version requests, and malformed
/// flags, come back as `clap` errors.
pub fn parse_manifest<I, T>(args: I) -> Result<Result<RunManifest, CliError>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    Ok(build(cli.command))
}

fn build(cmd: Cmd) -> Result<RunManifest, CliError> {
    let (command, common, shortcuts) = match cmd {
        Cmd::Simulate(c) => (Command::Simulate, c, Vec::new()),
        Cmd::Picard(c) => (Command::Picard, c, Vec::new()),
        Cmd::VerifyEstimates(c) => (Command::VerifyEstimates, c, Vec::new()),
        Cmd::InflationScan(s) => {
            let pairs = shortcut_pairs(&s);
            (Command::InflationScan, s.common, pairs)
        }
        Cmd::OracleCheck(s) => {
            let pairs = shortcut_pairs(&s);
            (Command::OracleCheck, s.common, pairs)
        }
    };

    let mut config = Config::defaults(command);
    if let Some(path) = &common.config {
        if !path.is_file() {
            return Err(CliError::MissingConfig(path.clone()));
        }
        let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        for (_, k, v) in parse_config(&text)? {
            config.set(&k, &v)?;
        }
    }
    let mut overrides = Vec::new();
    for arg in &common.overrides {
        overrides.push(parse_override(arg)?);
    }
    overrides.extend(shortcuts);
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    for (k, v) in &overrides {
        config.set(k, v)?;
    }
    if command.needs_well_posed_s() {
        SobolevIndex::new(config.real("s"))?.require_above_minus_half()?;
    }
    Ok(RunManifest {
        command,
        config_path: common.config,
        out: common.out.unwrap_or_else(|| PathBuf::from(format!("out-{}", command.name()))),
        seed: config.seed(),
        overrides,
        force: common.force,
        config,
    })
}

fn shortcut_pairs(s: &Shortcuts) -> Vec<(String, String)> {
    [("s", &s.s), ("t", &s.t), ("n", &s.n), ("beta", &s.beta), ("eta", &s.eta)]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
}
