//! Packets, acceptance policies and the merge semantics shared by the
//! simulator and the analytical solver.
//!
//! Ages are never stored. A node keeps the event version its packet
//! describes and the age is derived against the global event counter, so an
//! event update ages every node at once without touching any packet.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a packet originated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReliabilityTag {
    /// Originated at the reliable source.
    Reliable,
    /// Originated at the unreliable source.
    Unreliable,
}

impl ReliabilityTag {
    pub fn is_reliable(self) -> bool {
        matches!(self, ReliabilityTag::Reliable)
    }

    /// 0 for reliable, 1 for unreliable.
    pub fn bit(self) -> u8 {
        match self {
            ReliabilityTag::Reliable => 0,
            ReliabilityTag::Unreliable => 1,
        }
    }
}

/// A packet as held by a node: its origin and the event version it describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Packet {
    pub tag: ReliabilityTag,
    pub version: u64,
}

impl Packet {
    pub fn new(tag: ReliabilityTag, version: u64) -> Self {
        Self { tag, version }
    }

    pub fn reliable(version: u64) -> Self {
        Self::new(ReliabilityTag::Reliable, version)
    }

    pub fn unreliable(version: u64) -> Self {
        Self::new(ReliabilityTag::Unreliable, version)
    }
}

/// Version age of `packet` when the event is at `event_version`.
///
/// Panics if the packet claims a version newer than the event, which can only
/// happen through a corrupted state.
pub fn age_of(packet: Packet, event_version: u64) -> u64 {
    event_version
        .checked_sub(packet.version)
        .unwrap_or_else(|| {
            panic!(
                "packet version {} is ahead of event version {event_version}",
                packet.version
            )
        })
}

/// A packet viewed through its age rather than its version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgedPacket {
    pub tag: ReliabilityTag,
    pub age: u64,
}

impl AgedPacket {
    pub fn new(tag: ReliabilityTag, age: u64) -> Self {
        Self { tag, age }
    }

    pub fn reliable(age: u64) -> Self {
        Self::new(ReliabilityTag::Reliable, age)
    }

    pub fn unreliable(age: u64) -> Self {
        Self::new(ReliabilityTag::Unreliable, age)
    }
}

/// How a node chooses between its resident packet and an incoming one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    /// Keep a reliable packet unless the unreliable one is at least two
    /// versions fresher.
    ReliabilityFirst,
    /// Keep the freshest packet; reliable wins exact age ties.
    FreshnessFirst,
}

impl Policy {
    pub const ALL: [Policy; 2] = [Policy::ReliabilityFirst, Policy::FreshnessFirst];

    /// The literal used on the command line and in CSV files.
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::ReliabilityFirst => "reliability",
            Policy::FreshnessFirst => "freshness",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reliability" => Ok(Policy::ReliabilityFirst),
            "freshness" => Ok(Policy::FreshnessFirst),
            other => Err(Error::InvalidParams(format!(
                "unknown policy `{other}` (expected `reliability` or `freshness`)"
            ))),
        }
    }
}

/// Network size and the Poisson rates driving the model.
///
/// `lambda_u` and `lambda_r` are totals split evenly across the `n` nodes;
/// `lambda` is the total gossip output of one node, split evenly over the
/// other `n - 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub lambda_e: f64,
    pub lambda_u: f64,
    pub lambda_r: f64,
    pub lambda: f64,
    pub policy: Policy,
}

impl Params {
    pub fn new(
        n: usize,
        lambda_e: f64,
        lambda_u: f64,
        lambda_r: f64,
        lambda: f64,
        policy: Policy,
    ) -> Result<Self> {
        let params = Self {
            n,
            lambda_e,
            lambda_u,
            lambda_r,
            lambda,
            policy,
        };
        params.validate()?;
        Ok(params)
    }

    /// The operating point used throughout the numerical study:
    /// λ_E = 2, λ_U = 5, λ_R = 1, λ = 0.1.
    pub fn baseline(n: usize, policy: Policy) -> Self {
        Self {
            n,
            lambda_e: 2.0,
            lambda_u: 5.0,
            lambda_r: 1.0,
            lambda: 0.1,
            policy,
        }
    }

    pub fn with_policy(self, policy: Policy) -> Self {
        Self { policy, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        let rates = [
            ("lambda_e", self.lambda_e),
            ("lambda_u", self.lambda_u),
            ("lambda_r", self.lambda_r),
            ("lambda", self.lambda),
        ];
        for (name, rate) in rates {
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and nonnegative, got {rate}"
                )));
            }
        }
        if self.lambda_e <= 0.0 {
            return Err(Error::InvalidParams("lambda_e must be positive".into()));
        }
        Ok(())
    }

    /// Rate at which the unreliable source reaches one particular node.
    pub fn unreliable_rate_per_node(&self) -> f64 {
        self.lambda_u / self.n as f64
    }

    /// Rate at which the reliable source reaches one particular node.
    pub fn reliable_rate_per_node(&self) -> f64 {
        self.lambda_r / self.n as f64
    }

    /// Gossip rate along one ordered pair of distinct nodes; `None` for a
    /// single-node network.
    pub fn gossip_rate_per_pair(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.lambda / (self.n - 1) as f64)
    }
}

/// Age of a node set's winning packet; the empty set has no packet and
/// compares above every finite age.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetAge {
    Finite(u64),
    NoPacket,
}

impl SetAge {
    fn saturating_add(self, by: u64) -> SetAge {
        match self {
            SetAge::Finite(age) => SetAge::Finite(age.saturating_add(by)),
            SetAge::NoPacket => SetAge::NoPacket,
        }
    }
}

/// The packet that wins a merge over a set of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MergeOutcome {
    NoPacket,
    Packet(AgedPacket),
}

impl MergeOutcome {
    pub fn age(&self) -> SetAge {
        match self {
            MergeOutcome::NoPacket => SetAge::NoPacket,
            MergeOutcome::Packet(p) => SetAge::Finite(p.age),
        }
    }

    pub fn tag(&self) -> Option<ReliabilityTag> {
        match self {
            MergeOutcome::NoPacket => None,
            MergeOutcome::Packet(p) => Some(p.tag),
        }
    }

    pub fn packet(&self) -> Option<AgedPacket> {
        match self {
            MergeOutcome::NoPacket => None,
            MergeOutcome::Packet(p) => Some(*p),
        }
    }
}

/// Decides which of two packets a node keeps. Always returns one of the
/// two inputs; on a complete tie the resident packet stays.
pub fn accept_decision(incoming: AgedPacket, resident: AgedPacket, policy: Policy) -> AgedPacket {
    use ReliabilityTag::{Reliable, Unreliable};

    match (policy, incoming.tag, resident.tag) {
        (_, Reliable, Reliable) | (_, Unreliable, Unreliable) => {
            if incoming.age < resident.age {
                incoming
            } else {
                resident
            }
        }
        (Policy::ReliabilityFirst, Reliable, Unreliable) => {
            if incoming.age <= resident.age.saturating_add(1) {
                incoming
            } else {
                resident
            }
        }
        (Policy::ReliabilityFirst, Unreliable, Reliable) => {
            if resident.age <= incoming.age.saturating_add(1) {
                resident
            } else {
                incoming
            }
        }
        (Policy::FreshnessFirst, Reliable, Unreliable) => {
            if incoming.age <= resident.age {
                incoming
            } else {
                resident
            }
        }
        (Policy::FreshnessFirst, Unreliable, Reliable) => {
            if incoming.age < resident.age {
                incoming
            } else {
                resident
            }
        }
    }
}

/// The packet that wins over a whole set of nodes.
///
/// Reliability-first: the freshest reliable packet wins unless the freshest
/// unreliable packet is at least two versions newer. Freshness-first: the
/// freshest packet wins, reliable on ties. An empty set yields
/// [`MergeOutcome::NoPacket`].
pub fn merge_set<I>(members: I, policy: Policy) -> MergeOutcome
where
    I: IntoIterator<Item = AgedPacket>,
{
    let mut best_reliable = SetAge::NoPacket;
    let mut best_unreliable = SetAge::NoPacket;
    for member in members {
        let slot = if member.tag.is_reliable() {
            &mut best_reliable
        } else {
            &mut best_unreliable
        };
        *slot = (*slot).min(SetAge::Finite(member.age));
    }

    let slack = match policy {
        Policy::ReliabilityFirst => 1,
        Policy::FreshnessFirst => 0,
    };
    let (age, tag) = match best_reliable.cmp(&best_unreliable.saturating_add(slack)) {
        Ordering::Less | Ordering::Equal => (best_reliable, ReliabilityTag::Reliable),
        Ordering::Greater => (best_unreliable, ReliabilityTag::Unreliable),
    };
    match age {
        SetAge::Finite(age) => MergeOutcome::Packet(AgedPacket::new(tag, age)),
        SetAge::NoPacket => MergeOutcome::NoPacket,
    }
}

/// One jump of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transition {
    /// The tracked event moves to its next version.
    EventUpdate,
    /// The unreliable source pushes a fresh packet to a node.
    FromUnreliable(usize),
    /// The reliable source pushes a fresh packet to a node.
    FromReliable(usize),
    /// Node `from` pushes a copy of its packet to node `to`.
    Gossip { from: usize, to: usize },
}

/// Global event version, every node's packet and the simulation clock.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub event_version: u64,
    pub packets: Vec<Packet>,
    pub clock: f64,
}

impl NetworkState {
    /// Every node holds a fresh reliable packet at time zero.
    pub fn new(n: usize) -> Self {
        Self {
            event_version: 0,
            packets: vec![Packet::reliable(0); n],
            clock: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn age(&self, node: usize) -> u64 {
        age_of(self.packets[node], self.event_version)
    }

    pub fn aged(&self, node: usize) -> AgedPacket {
        let packet = self.packets[node];
        AgedPacket::new(packet.tag, age_of(packet, self.event_version))
    }

    pub fn unreliable_count(&self) -> usize {
        self.packets.iter().filter(|p| !p.tag.is_reliable()).count()
    }

    /// Applies `transition` in place. Only the target node changes.
    pub fn apply(&mut self, transition: Transition, policy: Policy) -> Result<()> {
        match transition {
            Transition::EventUpdate => {
                self.event_version += 1;
            }
            Transition::FromReliable(to) => {
                self.check_node(to)?;
                self.packets[to] = Packet::reliable(self.event_version);
            }
            Transition::FromUnreliable(to) => {
                self.check_node(to)?;
                let incoming = AgedPacket::unreliable(0);
                self.receive(to, incoming, policy);
            }
            Transition::Gossip { from, to } => {
                self.check_node(from)?;
                self.check_node(to)?;
                if from == to {
                    return Err(Error::InvalidTransition(format!(
                        "node {from} cannot gossip to itself"
                    )));
                }
                let incoming = self.aged(from);
                self.receive(to, incoming, policy);
            }
        }
        Ok(())
    }

    fn receive(&mut self, to: usize, incoming: AgedPacket, policy: Policy) {
        let kept = accept_decision(incoming, self.aged(to), policy);
        self.packets[to] = Packet::new(kept.tag, self.event_version - kept.age);
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node < self.packets.len() {
            Ok(())
        } else {
            Err(Error::InvalidTransition(format!(
                "node {node} out of range for {} nodes",
                self.packets.len()
            )))
        }
    }
}

/// Value-returning form of [`NetworkState::apply`].
pub fn apply_transition(
    mut state: NetworkState,
    transition: Transition,
    policy: Policy,
) -> Result<NetworkState> {
    state.apply(transition, policy)?;
    Ok(state)
}
