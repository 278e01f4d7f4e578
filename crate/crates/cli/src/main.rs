mod args;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::bail;
use clap::Parser;
use gossip_rel_core::{Params, SimConfig, SweepSpec};

use args::{Cli, Command, FileConfig};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// A fully resolved invocation.
enum Job {
    Solve {
        params: Params,
        all_k: bool,
    },
    Simulate {
        config: SimConfig,
        out: Option<PathBuf>,
    },
    Sweep {
        spec: SweepSpec,
        out: PathBuf,
    },
    Limit {
        params: Params,
    },
}

fn resolve(cli: Cli) -> anyhow::Result<Job> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    Ok(match cli.command {
        Command::Solve { model, all_k } => {
            let policy = model.policies(&file, false)?[0];
            Job::Solve {
                params: model.params(&file, policy)?,
                all_k: all_k || file.all_k.unwrap_or(false),
            }
        }
        Command::Simulate { model, sim, out } => {
            let policy = model.policies(&file, false)?[0];
            let params = model.params(&file, policy)?;
            Job::Simulate {
                config: sim.config(&file, params)?,
                out: out.or(file.out.clone()),
            }
        }
        Command::Sweep {
            model,
            sim,
            param,
            grid,
            compare,
            out,
        } => {
            let policies = model.policies(&file, true)?;
            let swept = args::sweep_param(param.as_deref(), &file)?;
            let Some(out) = out.or(file.out.clone()) else {
                bail!("sweep needs --out");
            };
            let spec = SweepSpec {
                swept,
                grid: grid
                    .or(file.grid.clone())
                    .unwrap_or_else(|| swept.default_grid()),
                base: model.params(&file, policies[0])?,
                policies,
                sim: (compare || file.compare.unwrap_or(false)).then(|| sim.settings(&file)),
            };
            spec.validate()?;
            Job::Sweep { spec, out }
        }
        Command::Limit { model } => Job::Limit {
            params: model.params(&file, gossip_rel_core::Policy::ReliabilityFirst)?,
        },
    })
}

fn execute(job: Job) -> anyhow::Result<()> {
    match job {
        Job::Solve { params, all_k } => print!("{}", commands::solve_report(&params, all_k)?),
        Job::Simulate { config, out } => {
            print!("{}", commands::simulate_report(&config, out.as_deref())?)
        }
        Job::Sweep { spec, out } => {
            let rows = commands::sweep_to_file(&spec, &out)?;
            eprintln!("wrote {rows} rows to {}", out.display());
        }
        Job::Limit { params } => print!("{}", commands::limit_report(&params)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let job = match resolve(cli) {
        Ok(job) => job,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match execute(job) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let invalid_input = matches!(
                err.downcast_ref::<gossip_rel_core::Error>(),
                Some(
                    gossip_rel_core::Error::InvalidParams(_)
                        | gossip_rel_core::Error::InvalidConfig(_)
                        | gossip_rel_core::Error::InvalidSweep(_)
                )
            );
            ExitCode::from(if invalid_input {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            })
        }
    }
}
