//! Reliability and version age of information in a fully connected gossip
//! network fed by a reliable and an unreliable source.
//!
//! Two independent routes to the same long-run numbers:
//!
//! * [`solver`] evaluates backward recursions over node subsets and returns
//!   the expected unreliable fraction `F` and version age `x1` exactly.
//! * [`sim`] runs a seeded discrete-event simulation of the full protocol and
//!   estimates the same quantities by time averaging.
//!
//! [`model`] holds the packet acceptance rules both routes share, and
//! [`sweep`] drives parameter sweeps and writes them as CSV.

pub mod error;
pub mod model;
pub mod sim;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{
    accept_decision, age_of, apply_transition, merge_set, AgedPacket, MergeOutcome, NetworkState,
    Packet, Params, Policy, ReliabilityTag, SetAge, Transition,
};
pub use sim::{next_transition, run, run_replication, SimConfig, SimEstimate, TransitionSampler};
pub use solver::{
    gossip_weight, large_gossip_limit, solve, solve_age_chain, solve_freshness_chain,
    solve_reliability_chain, ChainResult,
};
pub use sweep::{SweepParam, SweepRow, SweepSpec};
