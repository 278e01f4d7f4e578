//! Command-line flags and the optional TOML config file they override.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use gossip_rel_core::sim::DEFAULT_WARMUP_FRACTION;
use gossip_rel_core::sweep::SimSettings;
use gossip_rel_core::{Params, Policy, SimConfig, SweepParam};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "gossip-rel",
    version,
    about = "Reliability and version age of information in two-source gossip networks"
)]
pub struct Cli {
    /// TOML file of flag values (keys as flag names, e.g. `lambda-e = 2`).
    /// Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Long-run F and x1 from the backward recursions.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        /// Print every chain value for k = 1..n.
        #[arg(long)]
        all_k: bool,
    },
    /// Estimate F and x1 by discrete-event simulation.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Also write the estimate as a one-row CSV file.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Evaluate a grid of one parameter and write a CSV file.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Parameter to vary: n, lambda, lambda_e, lambda_u or lambda_r.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated, strictly increasing grid values.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Run the simulator at every grid point as well.
        #[arg(long)]
        compare: bool,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// F in the limit of unbounded gossip rate.
    Limit {
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Debug, Args, Default, Clone)]
pub struct ModelArgs {
    /// Number of user nodes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Event update rate.
    #[arg(long)]
    pub lambda_e: Option<f64>,
    /// Total rate of the unreliable source.
    #[arg(long)]
    pub lambda_u: Option<f64>,
    /// Total rate of the reliable source.
    #[arg(long)]
    pub lambda_r: Option<f64>,
    /// Total gossip rate of each node.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// `reliability`, `freshness`, or (sweep only) `both`.
    #[arg(long)]
    pub policy: Option<String>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct SimArgs {
    /// Simulated time per replication.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Initial time excluded from averages (default: 0.1% of the horizon).
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
}

/// Values read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub n: Option<usize>,
    #[serde(alias = "lambda_e")]
    pub lambda_e: Option<f64>,
    #[serde(alias = "lambda_u")]
    pub lambda_u: Option<f64>,
    #[serde(alias = "lambda_r")]
    pub lambda_r: Option<f64>,
    pub lambda: Option<f64>,
    pub policy: Option<String>,
    pub horizon: Option<f64>,
    pub warmup: Option<f64>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub param: Option<String>,
    pub grid: Option<Vec<f64>>,
    pub compare: Option<bool>,
    pub out: Option<PathBuf>,
    #[serde(alias = "all_k")]
    pub all_k: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }
}

pub const DEFAULT_N: usize = 100;
pub const DEFAULT_HORIZON: f64 = 1e6;

impl ModelArgs {
    fn policy_name(&self, file: &FileConfig) -> String {
        self.policy
            .clone()
            .or_else(|| file.policy.clone())
            .unwrap_or_else(|| "reliability".into())
    }

    /// Policies named by `--policy`; `both` only where `allow_both` is set.
    pub fn policies(&self, file: &FileConfig, allow_both: bool) -> anyhow::Result<Vec<Policy>> {
        let name = self.policy_name(file);
        if name == "both" {
            if !allow_both {
                bail!("`--policy both` is only accepted by `sweep`");
            }
            return Ok(Policy::ALL.to_vec());
        }
        Ok(vec![name.parse()?])
    }

    /// Resolved parameters; flags over file over the reference operating point.
    pub fn params(&self, file: &FileConfig, policy: Policy) -> anyhow::Result<Params> {
        let defaults = Params::baseline(DEFAULT_N, policy);
        let params = Params {
            n: self.n.or(file.n).unwrap_or(defaults.n),
            lambda_e: self.lambda_e.or(file.lambda_e).unwrap_or(defaults.lambda_e),
            lambda_u: self.lambda_u.or(file.lambda_u).unwrap_or(defaults.lambda_u),
            lambda_r: self.lambda_r.or(file.lambda_r).unwrap_or(defaults.lambda_r),
            lambda: self.lambda.or(file.lambda).unwrap_or(defaults.lambda),
            policy,
        };
        params.validate()?;
        Ok(params)
    }
}

impl SimArgs {
    pub fn settings(&self, file: &FileConfig) -> SimSettings {
        let horizon = self.horizon.or(file.horizon).unwrap_or(DEFAULT_HORIZON);
        SimSettings {
            horizon,
            warmup: self
                .warmup
                .or(file.warmup)
                .unwrap_or(horizon * DEFAULT_WARMUP_FRACTION),
            seed: self.seed.or(file.seed).unwrap_or(0),
            replications: self.replications.or(file.replications).unwrap_or(1),
        }
    }

    pub fn config(&self, file: &FileConfig, params: Params) -> anyhow::Result<SimConfig> {
        let s = self.settings(file);
        let config = SimConfig {
            params,
            horizon: s.horizon,
            warmup: s.warmup,
            seed: s.seed,
            replications: s.replications,
        };
        config.validate()?;
        Ok(config)
    }
}

pub fn sweep_param(flag: Option<&str>, file: &FileConfig) -> anyhow::Result<SweepParam> {
    match flag.or(file.param.as_deref()) {
        Some(name) => Ok(name.parse()?),
        None => bail!("sweep needs --param"),
    }
}
