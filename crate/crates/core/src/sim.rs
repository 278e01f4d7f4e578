//! Discrete-event Monte Carlo simulation of the gossip network.
//!
//! All Poisson processes are superposed into one clock: each step draws an
//! exponential waiting time at the total rate and then picks which transition
//! fired. Between jumps the state is piecewise constant, so time averages are
//! exact integrals over the sampled path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::model::NetworkState;
use crate::model::{Params, Transition};

/// Generator used for every replication; seeded from a single `u64`.
pub type SimRng = ChaCha12Rng;

/// Fraction of the horizon excluded from averages when no warmup is given.
pub const DEFAULT_WARMUP_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: Params,
    /// Total simulated time.
    pub horizon: f64,
    /// Initial time excluded from the averages.
    pub warmup: f64,
    pub seed: u64,
    pub replications: usize,
}

impl SimConfig {
    /// A single replication with the default warmup.
    pub fn new(params: Params, horizon: f64, seed: u64) -> Self {
        Self {
            params,
            horizon,
            warmup: horizon * DEFAULT_WARMUP_FRACTION,
            seed,
            replications: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.horizon) {
            return Err(Error::InvalidConfig(format!(
                "warmup must lie in [0, horizon), got {} with horizon {}",
                self.warmup, self.horizon
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Length of the averaging window.
    pub fn window(&self) -> f64 {
        self.horizon - self.warmup
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    /// Time-averaged fraction of nodes holding unreliable packets.
    pub f_hat: f64,
    /// Time-averaged version age, averaged over nodes.
    pub x1_hat: f64,
    /// Across-replication standard error; 0 for a single replication.
    pub f_stderr: f64,
    pub x1_stderr: f64,
    pub per_node_age: Vec<f64>,
    /// Summed over replications.
    pub events_processed: u64,
    /// Total time covered by the accumulated segments, per replication.
    pub observed_time: f64,
    pub replications: usize,
    pub seed: u64,
    pub horizon: f64,
    pub warmup: f64,
}

/// Samples the next jump of the superposed Poisson clock.
///
/// Category probabilities are proportional to λ_E (event update), λ_U
/// (unreliable source), λ_R (reliable source) and nλ (gossip, only for
/// n ≥ 2); targets and gossip sources are uniform.
#[derive(Debug, Clone)]
pub struct TransitionSampler {
    n: usize,
    total_rate: f64,
    waiting: Exp<f64>,
    // Cumulative category boundaries as fractions of the total rate.
    event_cut: f64,
    unreliable_cut: f64,
    reliable_cut: f64,
}

impl TransitionSampler {
    pub fn new(params: &Params) -> Result<Self> {
        params.validate()?;
        let gossip = if params.n >= 2 {
            params.n as f64 * params.lambda
        } else {
            0.0
        };
        let total_rate = params.lambda_e + params.lambda_u + params.lambda_r + gossip;
        if !(total_rate > 0.0 && total_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "total transition rate must be positive and finite, got {total_rate}"
            )));
        }
        let waiting = Exp::new(total_rate)
            .map_err(|e| Error::InvalidConfig(format!("waiting-time distribution: {e}")))?;
        let event_cut = params.lambda_e / total_rate;
        let unreliable_cut = event_cut + params.lambda_u / total_rate;
        let reliable_cut = unreliable_cut + params.lambda_r / total_rate;
        Ok(Self {
            n: params.n,
            total_rate,
            waiting,
            event_cut,
            unreliable_cut,
            reliable_cut,
        })
    }

    /// Sum of all transition rates.
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    /// Probability that the next jump is an event update.
    pub fn event_probability(&self) -> f64 {
        self.event_cut
    }

    /// Probability that the next jump is a gossip transfer of any pair.
    pub fn gossip_probability(&self) -> f64 {
        1.0 - self.reliable_cut
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Transition) {
        let wait = self.waiting.sample(rng);
        let pick: f64 = rng.random();
        let transition = if pick < self.event_cut {
            Transition::EventUpdate
        } else if pick < self.unreliable_cut {
            Transition::FromUnreliable(rng.random_range(0..self.n))
        } else if pick < self.reliable_cut || self.n < 2 {
            Transition::FromReliable(rng.random_range(0..self.n))
        } else {
            let from = rng.random_range(0..self.n);
            let offset = rng.random_range(1..self.n);
            Transition::Gossip {
                from,
                to: (from + offset) % self.n,
            }
        };
        (wait, transition)
    }
}

/// One draw of the waiting time and the transition that ends it.
pub fn next_transition<R: Rng + ?Sized>(params: &Params, rng: &mut R) -> Result<(f64, Transition)> {
    Ok(TransitionSampler::new(params)?.sample(rng))
}

/// Time integrals of the tracked signals over `[warmup, horizon]`.
///
/// Per-node versions are integrated lazily: a node's contribution is only
/// settled when its packet changes, which keeps each event O(1).
struct Accumulator {
    warmup: f64,
    horizon: f64,
    event_version_integral: f64,
    unreliable_integral: f64,
    node_version_integral: Vec<f64>,
    node_settled_at: Vec<f64>,
    observed: f64,
}

impl Accumulator {
    fn new(n: usize, warmup: f64, horizon: f64) -> Self {
        Self {
            warmup,
            horizon,
            event_version_integral: 0.0,
            unreliable_integral: 0.0,
            node_version_integral: vec![0.0; n],
            node_settled_at: vec![0.0; n],
            observed: 0.0,
        }
    }

    /// Length of `[from, to)` inside the averaging window.
    fn overlap(&self, from: f64, to: f64) -> f64 {
        (to.min(self.horizon) - from.max(self.warmup)).max(0.0)
    }

    /// Accounts for a segment of constant global state.
    fn segment(&mut self, from: f64, to: f64, event_version: u64, unreliable: usize) {
        let dt = self.overlap(from, to);
        if dt > 0.0 {
            self.observed += dt;
            self.event_version_integral += event_version as f64 * dt;
            self.unreliable_integral += unreliable as f64 * dt;
        }
    }

    /// Settles node `i`, whose packet had `version` since it was last settled.
    fn settle_node(&mut self, i: usize, now: f64, version: u64) {
        let dt = self.overlap(self.node_settled_at[i], now);
        self.node_version_integral[i] += version as f64 * dt;
        self.node_settled_at[i] = now;
    }
}

/// Runs a single replication seeded with `seed`, ignoring
/// `config.replications` and `config.seed`.
pub fn run_replication(config: &SimConfig, seed: u64) -> Result<SimEstimate> {
    config.validate()?;
    let params = config.params;
    let sampler = TransitionSampler::new(&params)?;
    let mut rng = SimRng::seed_from_u64(seed);
    let n = params.n;

    let mut state = NetworkState::new(n);
    let mut unreliable = state.unreliable_count();
    let mut acc = Accumulator::new(n, config.warmup, config.horizon);
    let mut events = 0u64;

    while state.clock < config.horizon {
        let (wait, transition) = sampler.sample(&mut rng);
        let next_clock = state.clock + wait;
        acc.segment(state.clock, next_clock, state.event_version, unreliable);
        if next_clock >= config.horizon {
            state.clock = next_clock;
            break;
        }
        state.clock = next_clock;

        let target = match transition {
            Transition::EventUpdate => None,
            Transition::FromUnreliable(j) | Transition::FromReliable(j) => Some(j),
            Transition::Gossip { to, .. } => Some(to),
        };
        let before = target.map(|j| state.packets[j]);
        state.apply(transition, params.policy)?;
        events += 1;

        if let (Some(j), Some(old)) = (target, before) {
            let new = state.packets[j];
            if new != old {
                acc.settle_node(j, state.clock, old.version);
                match (old.tag.is_reliable(), new.tag.is_reliable()) {
                    (true, false) => unreliable += 1,
                    (false, true) => unreliable -= 1,
                    _ => {}
                }
            }
        }
    }

    for (i, packet) in state.packets.iter().enumerate() {
        acc.settle_node(i, config.horizon, packet.version);
    }

    let window = config.window();
    let per_node_age: Vec<f64> = acc
        .node_version_integral
        .iter()
        .map(|&v| ((acc.event_version_integral - v) / window).max(0.0))
        .collect();
    let x1_hat = per_node_age.iter().sum::<f64>() / n as f64;
    let f_hat = (acc.unreliable_integral / (window * n as f64)).clamp(0.0, 1.0);

    Ok(SimEstimate {
        f_hat,
        x1_hat,
        f_stderr: 0.0,
        x1_stderr: 0.0,
        per_node_age,
        events_processed: events,
        observed_time: acc.observed,
        replications: 1,
        seed,
        horizon: config.horizon,
        warmup: config.warmup,
    })
}

/// Runs `config.replications` replications with seeds `seed, seed + 1, ...`
/// and pools them with equal weights. Replications run in parallel; the
/// result depends only on the config.
pub fn run(config: &SimConfig) -> Result<SimEstimate> {
    config.validate()?;
    let runs = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, config.seed.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(pool(config, runs))
}

fn pool(config: &SimConfig, runs: Vec<SimEstimate>) -> SimEstimate {
    if runs.len() == 1 {
        return runs.into_iter().next().unwrap();
    }
    let reps = runs.len() as f64;
    let n = config.params.n;
    let (f_hat, f_stderr) = mean_and_stderr(runs.iter().map(|r| r.f_hat));
    let (x1_hat, x1_stderr) = mean_and_stderr(runs.iter().map(|r| r.x1_hat));
    let per_node_age = (0..n)
        .map(|i| runs.iter().map(|r| r.per_node_age[i]).sum::<f64>() / reps)
        .collect();
    SimEstimate {
        f_hat,
        x1_hat,
        f_stderr,
        x1_stderr,
        per_node_age,
        events_processed: runs.iter().map(|r| r.events_processed).sum(),
        observed_time: runs.iter().map(|r| r.observed_time).sum::<f64>() / reps,
        replications: runs.len(),
        seed: config.seed,
        horizon: config.horizon,
        warmup: config.warmup,
    }
}

/// Sample mean and standard error of the mean.
fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let count = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / count;
    if count < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}
