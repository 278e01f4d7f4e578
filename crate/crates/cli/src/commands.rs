use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::Context;
use gossip_rel_core::sweep::{self, format_float, SweepSpec};
use gossip_rel_core::{large_gossip_limit, sim, solve, ChainResult, Params, SimConfig};

pub fn solve_report(params: &Params, all_k: bool) -> anyhow::Result<String> {
    let chains = solve(params)?;
    let mut out = header(params);
    writeln!(out, "F  = {}", format_float(chains.f_value))?;
    writeln!(out, "x1 = {}", format_float(chains.x1_value))?;
    if all_k {
        out.push_str(&chain_table(&chains));
    }
    Ok(out)
}

fn header(params: &Params) -> String {
    format!(
        "policy: {}\nn: {}  lambda_e: {}  lambda_u: {}  lambda_r: {}  lambda: {}\n",
        params.policy,
        params.n,
        format_float(params.lambda_e),
        format_float(params.lambda_u),
        format_float(params.lambda_r),
        format_float(params.lambda),
    )
}

fn chain_table(chains: &ChainResult) -> String {
    let mut columns: Vec<(&str, &[f64])> = vec![("a", &chains.a), ("b", &chains.b)];
    if let (Some(c), Some(d)) = (&chains.c, &chains.d) {
        columns.push(("c", c));
        columns.push(("d", d));
    }
    columns.push(("e", &chains.e));

    let mut out = String::from("k");
    for (name, _) in &columns {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    for k in 0..chains.n {
        out.push_str(&(k + 1).to_string());
        for (_, values) in &columns {
            out.push('\t');
            out.push_str(&format_float(values[k]));
        }
        out.push('\n');
    }
    out
}

pub fn simulate_report(config: &SimConfig, csv_out: Option<&Path>) -> anyhow::Result<String> {
    let estimate = sim::run(config)?;
    let mut out = header(&config.params);
    writeln!(
        out,
        "horizon: {}  warmup: {}  seed: {}  replications: {}",
        format_float(config.horizon),
        format_float(config.warmup),
        config.seed,
        config.replications
    )?;
    writeln!(
        out,
        "f_hat  = {} ± {}",
        format_float(estimate.f_hat),
        format_float(estimate.f_stderr)
    )?;
    writeln!(
        out,
        "x1_hat = {} ± {}",
        format_float(estimate.x1_hat),
        format_float(estimate.x1_stderr)
    )?;
    writeln!(out, "events: {}", estimate.events_processed)?;

    if let Some(path) = csv_out {
        let settings = sweep::SimSettings {
            horizon: config.horizon,
            warmup: config.warmup,
            seed: config.seed,
            replications: config.replications,
        };
        let chains = solve(&config.params);
        let row = sweep::SweepRow {
            swept_param: String::new(),
            swept_value: None,
            params: config.params,
            // The solver rejects some configurations the simulator accepts.
            f_solver: chains.as_ref().map_or(f64::NAN, |c| c.f_value),
            x1_solver: chains.as_ref().map_or(f64::NAN, |c| c.x1_value),
            sim: Some(sweep::SimColumns {
                f_sim: estimate.f_hat,
                f_sim_stderr: estimate.f_stderr,
                x1_sim: estimate.x1_hat,
                x1_sim_stderr: estimate.x1_stderr,
                horizon: settings.horizon,
                warmup: settings.warmup,
                seed: settings.seed,
                replications: settings.replications,
            }),
        };
        write_rows(path, || Ok(vec![row]))?;
    }
    Ok(out)
}

/// Runs the sweep and writes it to `path`. The file is created before any
/// work starts and removed again if anything fails.
pub fn sweep_to_file(spec: &SweepSpec, path: &Path) -> anyhow::Result<usize> {
    write_rows(path, || Ok(sweep::run_sweep(spec)?))
}

fn write_rows<F>(path: &Path, rows: F) -> anyhow::Result<usize>
where
    F: FnOnce() -> anyhow::Result<Vec<sweep::SweepRow>>,
{
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let result = rows().and_then(|rows| {
        sweep::write_csv(BufWriter::new(file), &rows)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(rows.len())
    });
    if result.is_err() {
        let _ = std::fs::remove_file(path);
    }
    result
}

pub fn limit_report(params: &Params) -> anyhow::Result<String> {
    let limit = large_gossip_limit(params)?;
    Ok(format!("F_limit = {}\n", format_float(limit)))
}
