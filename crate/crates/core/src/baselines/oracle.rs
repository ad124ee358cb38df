//! Offline benchmarks with full knowledge of the energy and channel
//! realization: an exact dynamic program for tiny instances and a
//! min-cost-flow relaxation bound that scales to larger ones.

use super::mcmf::MinCostFlow;
use crate::agents::action_space::{action_decode, binomial};
use crate::env::{AccessAction, ExogenousTrace, ScenarioConfig};
use crate::error::{Error, Result};

/// Largest `(C+1)^N * horizon * C(N,K)` the exact program accepts.
pub const ORACLE_WORK_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Maximal discounted sum rate from the initial batteries.
    pub value: f64,
    pub schedule: Vec<AccessAction>,
}

fn check_trace(trace: &ExogenousTrace, cfg: &ScenarioConfig, horizon: usize, initial: &[u32]) -> Result<()> {
    trace.validate()?;
    if trace.n_ues() != cfg.n_ues || initial.len() != cfg.n_ues {
        return Err(Error::Shape(format!(
            "trace has {} UEs, initial batteries {}, scenario {}",
            trace.n_ues(),
            initial.len(),
            cfg.n_ues
        )));
    }
    if horizon > trace.horizon() {
        return Err(Error::Shape(format!(
            "horizon {horizon} exceeds trace length {}",
            trace.horizon()
        )));
    }
    if initial.iter().any(|&b| b > cfg.battery_capacity) {
        return Err(Error::Config("initial battery above capacity".into()));
    }
    Ok(())
}

/// Work estimate `(C+1)^N * horizon * C(N,K)` used by the size guard.
pub fn oracle_cost(cfg: &ScenarioConfig, horizon: usize) -> u128 {
    let states = (cfg.battery_capacity as u128 + 1).checked_pow(cfg.n_ues as u32).unwrap_or(u128::MAX);
    states
        .saturating_mul(horizon as u128)
        .saturating_mul(binomial(cfg.n_ues, cfg.k_channels))
}

/// Exact backward dynamic program over joint battery states.
pub fn dp_oracle(
    trace: &ExogenousTrace,
    cfg: &ScenarioConfig,
    horizon: usize,
    gamma: f64,
    initial: &[u32],
) -> Result<OracleSolution> {
    check_trace(trace, cfg, horizon, initial)?;
    let cost = oracle_cost(cfg, horizon);
    if cost > ORACLE_WORK_LIMIT {
        return Err(Error::OracleTooLarge {
            cost,
            limit: ORACLE_WORK_LIMIT,
        });
    }
    let (n, k) = (cfg.n_ues, cfg.k_channels);
    let radix = cfg.battery_capacity as usize + 1;
    let n_states = radix.pow(n as u32);
    let actions: Vec<AccessAction> = (0..binomial(n, k) as usize)
        .map(|i| action_decode(i, n, k))
        .collect::<Result<_>>()?;
    let budget = cfg.link_budget();
    let p = cfg.tx_power;
    let c = cfg.battery_capacity;

    let decode = |mut s: usize, out: &mut [u32]| {
        for b in out.iter_mut() {
            *b = (s % radix) as u32;
            s /= radix;
        }
    };
    let encode = |bs: &[u32]| bs.iter().rev().fold(0usize, |acc, &b| acc * radix + b as usize);

    // value[t][s] and best action per (t, s)
    let mut next_value = vec![0.0; n_states];
    let mut policy = vec![vec![0u32; n_states]; horizon];
    let mut bat = vec![0u32; n];
    let mut nb = vec![0u32; n];
    for t in (0..horizon).rev() {
        let rates: Vec<f64> = trace.gains[t].iter().map(|&g| budget.rate(g)).collect();
        let arrivals = &trace.arrivals[t];
        let mut value = vec![0.0; n_states];
        for s in 0..n_states {
            decode(s, &mut bat);
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0u32;
            for (ai, a) in actions.iter().enumerate() {
                let mut r = 0.0;
                for i in 0..n {
                    let used = if a.contains(i) && bat[i] >= p {
                        r += rates[i];
                        p
                    } else {
                        0
                    };
                    nb[i] = (bat[i] + arrivals[i] - used).min(c);
                }
                let v = r + gamma * next_value[encode(&nb)];
                if v > best {
                    best = v;
                    best_a = ai as u32;
                }
            }
            value[s] = best;
            policy[t][s] = best_a;
        }
        next_value = value;
    }
    let mut schedule = Vec::with_capacity(horizon);
    let mut b = initial.to_vec();
    for (t, pol) in policy.iter().enumerate() {
        let a = actions[pol[encode(&b)] as usize].clone();
        for i in 0..n {
            let used = if a.contains(i) && b[i] >= p { p } else { 0 };
            b[i] = (b[i] + trace.arrivals[t][i] - used).min(c);
        }
        schedule.push(a);
    }
    let value = if horizon == 0 { 0.0 } else { next_value[encode(initial)] };
    Ok(OracleSolution { value, schedule })
}

/// Discounted sum rate of a fixed schedule replayed on the trace.
pub fn schedule_value(
    trace: &ExogenousTrace,
    cfg: &ScenarioConfig,
    schedule: &[AccessAction],
    gamma: f64,
    initial: &[u32],
) -> Result<f64> {
    check_trace(trace, cfg, schedule.len(), initial)?;
    let budget = cfg.link_budget();
    let (p, c) = (cfg.tx_power, cfg.battery_capacity);
    let mut b = initial.to_vec();
    let mut total = 0.0;
    let mut discount = 1.0;
    for (t, a) in schedule.iter().enumerate() {
        let mut r = 0.0;
        for i in 0..cfg.n_ues {
            let used = if a.contains(i) && b[i] >= p {
                r += budget.rate(trace.gains[t][i]);
                p
            } else {
                0
            };
            b[i] = (b[i] + trace.arrivals[t][i] - used).min(c);
        }
        total += discount * r;
        discount *= gamma;
    }
    Ok(total)
}

/// Upper bound on the discounted sum rate with capacity and causality
/// dropped: UE `i` may transmit at most `floor((B_i0 + sum_t E_it) / P)`
/// times in total and at most `K` UEs transmit per slot. Solved exactly as a
/// min-cost flow source -> UE -> slot -> sink.
pub fn relaxation_bound(
    trace: &ExogenousTrace,
    cfg: &ScenarioConfig,
    horizon: usize,
    gamma: f64,
    initial: &[u32],
) -> Result<f64> {
    check_trace(trace, cfg, horizon, initial)?;
    let n = cfg.n_ues;
    let budget = cfg.link_budget();
    let source = 0;
    let ue_node = |i: usize| 1 + i;
    let slot_node = |t: usize| 1 + n + t;
    let sink = 1 + n + horizon;
    let mut g = MinCostFlow::new(sink + 1);
    for i in 0..n {
        let energy: u64 = initial[i] as u64 + (0..horizon).map(|t| trace.arrivals[t][i] as u64).sum::<u64>();
        let limit = (energy / cfg.tx_power as u64).min(horizon as u64);
        if limit > 0 {
            g.add_edge(source, ue_node(i), limit as i64, 0.0);
        }
    }
    let mut discount = 1.0;
    for t in 0..horizon {
        for i in 0..n {
            let w = discount * budget.rate(trace.gains[t][i]);
            if w > 0.0 {
                g.add_edge(ue_node(i), slot_node(t), 1, -w);
            }
        }
        g.add_edge(slot_node(t), sink, cfg.k_channels as i64, 0.0);
        discount *= gamma;
    }
    let (_, cost) = g.min_cost_flow(source, sink, |path_cost| path_cost < 0.0)?;
    Ok(-cost)
}
