//! Long-run expectations of the fully connected network, computed from the
//! backward recursions over typical node subsets of size k = n, n-1, ..., 1.
//!
//! For a subset of k nodes the sequences are
//!
//! * `a[k]`: expected set reliability status (1 = unreliable wins),
//! * `b[k]`: the same, with the unreliable source's fresh packet added,
//! * `c[k]`: probability the freshest reliable packet in the set has age 0,
//! * `d[k]`: probability it has age 1,
//! * `e[k]`: expected set version age.
//!
//! `F = a[1]` and `x1 = e[1]`. The gossip weight vanishes at k = n, so each
//! chain starts from a closed form and no value beyond k = n is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Params, Policy};

/// Per-k chains, stored with index 0 holding k = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub n: usize,
    pub policy: Policy,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Absent under freshness-first.
    pub c: Option<Vec<f64>>,
    /// Absent under freshness-first.
    pub d: Option<Vec<f64>>,
    pub e: Vec<f64>,
    /// Expected fraction of nodes holding unreliable information (`a[1]`).
    pub f_value: f64,
    /// Expected version age of a node (`e[1]`).
    pub x1_value: f64,
}

impl ChainResult {
    /// Chain value at subset size `k` (1-based).
    pub fn at(chain: &[f64], k: usize) -> f64 {
        chain[k - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityChain {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgeChain {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

/// Total rate at which gossip from outside a k-subset lands inside it:
/// k(n-k)λ/(n-1).
pub fn gossip_weight(params: &Params, k: usize) -> f64 {
    let n = params.n;
    debug_assert!((1..=n).contains(&k), "k = {k} outside 1..={n}");
    if n < 2 || k >= n {
        return 0.0;
    }
    (k * (n - k)) as f64 * params.lambda / (n - 1) as f64
}

/// Rates seen by a k-subset, precomputed once per k.
#[derive(Clone, Copy)]
struct SubsetRates {
    event: f64,
    unreliable: f64,
    reliable: f64,
    gossip: f64,
}

impl SubsetRates {
    fn new(params: &Params, k: usize) -> Self {
        let share = k as f64 / params.n as f64;
        Self {
            event: params.lambda_e,
            unreliable: params.lambda_u * share,
            reliable: params.lambda_r * share,
            gossip: gossip_weight(params, k),
        }
    }

    /// Denominator of the chains that are reset by the event (b, c, d).
    fn event_driven(&self) -> f64 {
        self.event + self.reliable + self.gossip
    }

    /// Denominator of the chains that are reset by the sources (a, e).
    fn source_driven(&self) -> Result<f64> {
        let total = self.unreliable + self.reliable + self.gossip;
        if total > 0.0 {
            Ok(total)
        } else {
            Err(Error::InvalidParams(
                "lambda_u and lambda_r are both zero: no source ever refreshes the last node"
                    .into(),
            ))
        }
    }
}

/// Evaluates `step(k, next)` for k = n down to 1, feeding each result into
/// the next step, and returns the values indexed from k = 1.
fn backward<F>(n: usize, mut step: F) -> Result<Vec<f64>>
where
    F: FnMut(usize, f64) -> Result<f64>,
{
    let mut out = vec![0.0; n];
    // At k = n the gossip weight is zero, so the seed value is never used.
    let mut next = 0.0;
    for k in (1..=n).rev() {
        next = step(k, next)?;
        out[k - 1] = next;
    }
    Ok(out)
}

fn subset_rates(params: &Params) -> Result<Vec<SubsetRates>> {
    params.validate()?;
    Ok((1..=params.n)
        .map(|k| SubsetRates::new(params, k))
        .collect())
}

fn fresh_reliable_chain(rates: &[SubsetRates]) -> Result<Vec<f64>> {
    backward(rates.len(), |k, c_next| {
        let r = rates[k - 1];
        Ok((r.reliable + c_next * r.gossip) / r.event_driven())
    })
}

fn reliability_chains(rates: &[SubsetRates], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = backward(rates.len(), |k, b_next| {
        let r = rates[k - 1];
        Ok(((1.0 - c[k - 1]) * r.event + b_next * r.gossip) / r.event_driven())
    })?;
    let a = status_chain(rates, &b)?;
    Ok((a, b))
}

/// a[k] from b[k]; shared by both policies.
fn status_chain(rates: &[SubsetRates], b: &[f64]) -> Result<Vec<f64>> {
    backward(rates.len(), |k, a_next| {
        let r = rates[k - 1];
        Ok((b[k - 1] * r.unreliable + a_next * r.gossip) / r.source_driven()?)
    })
}

fn age_chains(rates: &[SubsetRates], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = backward(rates.len(), |k, d_next| {
        let r = rates[k - 1];
        Ok((c[k - 1] * r.event + d_next * r.gossip) / r.event_driven())
    })?;
    let e = backward(rates.len(), |k, e_next| {
        let r = rates[k - 1];
        Ok((r.event + d[k - 1] * r.unreliable + e_next * r.gossip) / r.source_driven()?)
    })?;
    Ok((d, e))
}

/// Reliability chains a, b, c under the reliability-first policy.
pub fn solve_reliability_chain(params: &Params) -> Result<ReliabilityChain> {
    let rates = subset_rates(params)?;
    let c = fresh_reliable_chain(&rates)?;
    let (a, b) = reliability_chains(&rates, &c)?;
    Ok(ReliabilityChain { a, b, c })
}

/// Version-age chains c, d, e under the reliability-first policy.
pub fn solve_age_chain(params: &Params) -> Result<AgeChain> {
    let rates = subset_rates(params)?;
    let c = fresh_reliable_chain(&rates)?;
    let (d, e) = age_chains(&rates, &c)?;
    Ok(AgeChain { c, d, e })
}

/// Freshness-first chains ā, b̄, ē, returned with `c` and `d` absent.
pub fn solve_freshness_chain(params: &Params) -> Result<ChainResult> {
    let rates = subset_rates(params)?;
    let b = backward(rates.len(), |k, b_next| {
        let r = rates[k - 1];
        Ok((r.event + b_next * r.gossip) / r.event_driven())
    })?;
    let a = status_chain(&rates, &b)?;
    let e = backward(rates.len(), |k, e_next| {
        let r = rates[k - 1];
        Ok((r.event + e_next * r.gossip) / r.source_driven()?)
    })?;
    Ok(ChainResult {
        n: params.n,
        policy: Policy::FreshnessFirst,
        f_value: a[0],
        x1_value: e[0],
        a,
        b,
        c: None,
        d: None,
        e,
    })
}

/// All chains for `params.policy`.
pub fn solve(params: &Params) -> Result<ChainResult> {
    match params.policy {
        Policy::FreshnessFirst => solve_freshness_chain(params),
        Policy::ReliabilityFirst => {
            let rates = subset_rates(params)?;
            let c = fresh_reliable_chain(&rates)?;
            let (a, b) = reliability_chains(&rates, &c)?;
            let (d, e) = age_chains(&rates, &c)?;
            Ok(ChainResult {
                n: params.n,
                policy: Policy::ReliabilityFirst,
                f_value: a[0],
                x1_value: e[0],
                a,
                b,
                c: Some(c),
                d: Some(d),
                e,
            })
        }
    }
}

/// Limit of F as the gossip rate grows without bound:
/// (λ_E/(λ_E+λ_R))² · λ_U/(λ_U+λ_R).
pub fn large_gossip_limit(params: &Params) -> Result<f64> {
    let event_or_reliable = params.lambda_e + params.lambda_r;
    let unreliable_or_reliable = params.lambda_u + params.lambda_r;
    let positive = |rate: f64| rate > 0.0;
    if !positive(event_or_reliable) || !positive(unreliable_or_reliable) {
        return Err(Error::InvalidParams(
            "large-gossip limit needs lambda_e + lambda_r > 0 and lambda_u + lambda_r > 0".into(),
        ));
    }
    let stale = params.lambda_e / event_or_reliable;
    Ok(stale * stale * params.lambda_u / unreliable_or_reliable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const RF: Policy = Policy::ReliabilityFirst;
    const FF: Policy = Policy::FreshnessFirst;

    #[test]
    fn gossip_weight_examples() {
        let p = Params::baseline(100, RF);
        assert_relative_eq!(gossip_weight(&p, 50), 50.0 * 50.0 * 0.1 / 99.0);
        assert_eq!(gossip_weight(&Params::baseline(1, RF), 1), 0.0);
        let p = Params {
            lambda: 5.0,
            ..Params::baseline(10, RF)
        };
        assert_eq!(gossip_weight(&p, 10), 0.0);
    }

    #[test]
    fn single_node_reliability_chain() {
        let chain = solve_reliability_chain(&Params::baseline(1, RF)).unwrap();
        assert_relative_eq!(chain.c[0], 1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(chain.b[0], 4.0 / 9.0, max_relative = 1e-12);
        assert_relative_eq!(chain.a[0], 20.0 / 54.0, max_relative = 1e-12);
    }

    #[test]
    fn single_node_age_chain() {
        let chain = solve_age_chain(&Params::baseline(1, RF)).unwrap();
        assert_relative_eq!(chain.d[0], 2.0 / 9.0, max_relative = 1e-12);
        assert_relative_eq!(chain.e[0], 28.0 / 54.0, max_relative = 1e-12);
    }

    #[test]
    fn single_node_freshness_chain() {
        let chain = solve_freshness_chain(&Params::baseline(1, FF)).unwrap();
        assert_relative_eq!(chain.b[0], 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(chain.a[0], 5.0 / 9.0, max_relative = 1e-12);
        assert_relative_eq!(chain.e[0], 1.0 / 3.0, max_relative = 1e-12);
        assert!(chain.c.is_none() && chain.d.is_none());
    }

    #[test]
    fn no_unreliable_source_means_no_unreliable_nodes() {
        for n in [1, 2, 7, 100] {
            let p = Params {
                lambda_u: 0.0,
                ..Params::baseline(n, RF)
            };
            let chain = solve_reliability_chain(&p).unwrap();
            assert!(chain.a.iter().all(|&a| a == 0.0), "n = {n}");
        }
    }

    #[test]
    fn no_reliable_source_means_every_node_unreliable() {
        for n in [1, 2, 7, 100] {
            let p = Params {
                lambda_r: 0.0,
                ..Params::baseline(n, RF)
            };
            let result = solve(&p).unwrap();
            assert!(result.c.as_ref().unwrap().iter().all(|&c| c == 0.0));
            assert!(result.d.as_ref().unwrap().iter().all(|&d| d == 0.0));
            assert!(result.b.iter().all(|&b| b == 1.0));
            assert!(result.a.iter().all(|&a| a == 1.0));
        }
    }

    #[test]
    fn both_sources_silent_is_rejected() {
        let p = Params {
            lambda_u: 0.0,
            lambda_r: 0.0,
            ..Params::baseline(1, RF)
        };
        assert!(matches!(solve(&p), Err(Error::InvalidParams(_))));
        assert!(matches!(
            solve(&p.with_policy(FF)),
            Err(Error::InvalidParams(_))
        ));
        assert!(solve(&Params { n: 0, ..p }).is_err());
    }

    #[test]
    fn flooding_with_reliable_packets_drives_age_to_zero() {
        let p = Params {
            lambda_r: 1e6,
            ..Params::baseline(100, RF)
        };
        assert!(solve_age_chain(&p).unwrap().e[0] < 1e-2);
    }

    #[test]
    fn flooding_with_unreliable_packets() {
        let p = Params {
            lambda_u: 1e6,
            ..Params::baseline(100, RF)
        };
        let age = solve_age_chain(&p).unwrap();
        assert!((age.e[0] - age.d[0]).abs() <= 1e-3);
        let fresh = solve_freshness_chain(&p.with_policy(FF)).unwrap();
        assert!(fresh.e[0] < 1e-3);
    }

    #[test]
    fn shared_fresh_reliable_chain() {
        let p = Params::baseline(37, RF);
        assert_eq!(
            solve_reliability_chain(&p).unwrap().c,
            solve_age_chain(&p).unwrap().c
        );
    }

    #[test]
    fn large_gossip_limit_examples() {
        let p = Params::baseline(100, RF);
        assert_relative_eq!(
            large_gossip_limit(&p).unwrap(),
            20.0 / 54.0,
            max_relative = 1e-15
        );
        assert_eq!(
            large_gossip_limit(&Params { lambda_u: 0.0, ..p }).unwrap(),
            0.0
        );
        assert_eq!(
            large_gossip_limit(&Params { lambda_r: 0.0, ..p }).unwrap(),
            1.0
        );
        let silent = Params {
            lambda_u: 0.0,
            lambda_r: 0.0,
            ..p
        };
        assert!(large_gossip_limit(&silent).is_err());
    }

    #[test]
    fn large_gossip_convergence_is_monotone() {
        let limit = large_gossip_limit(&Params::baseline(100, RF)).unwrap();
        let gaps: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&lambda| {
                let p = Params {
                    lambda,
                    ..Params::baseline(100, RF)
                };
                (solve(&p).unwrap().f_value - limit).abs()
            })
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        assert!(gaps[2] <= 5e-3);
    }
}
