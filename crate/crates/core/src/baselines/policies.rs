//! Online comparison schedulers.

use rand::Rng;

use crate::agents::action_space::random_subset;
use crate::env::{transmit_indicator, AccessAction, LinkBudget, ScenarioConfig, SystemState};

/// Cyclic pointer into UE index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoundRobinState {
    pub pointer: usize,
}

/// The next `k` UEs cyclically from the pointer; the pointer advances by `k`.
pub fn round_robin_select(state: RoundRobinState, n: usize, k: usize) -> (AccessAction, RoundRobinState) {
    assert!(k <= n && n > 0, "round robin needs 0 < K <= N");
    let sel = (0..k).map(|j| (state.pointer + j) % n).collect();
    let action = AccessAction::new(sel, n).expect("k <= n distinct indices");
    (
        action,
        RoundRobinState {
            pointer: (state.pointer + k) % n,
        },
    )
}

/// Uniform over all `k`-subsets.
pub fn random_select<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> AccessAction {
    random_subset(n, k, rng)
}

/// Top-`k` by instantaneous rate among UEs that can transmit; remaining
/// slots go to the best-gain UEs that cannot. Ties break to lower index.
pub fn myopic_select(batteries: &[u32], gains: &[f64], k: usize, tx_power: u32, budget: &LinkBudget) -> AccessAction {
    let n = batteries.len();
    let mut order: Vec<usize> = (0..n).collect();
    let feasible = |i: usize| transmit_indicator(batteries[i], tx_power) == 1;
    order.sort_by(|&a, &b| {
        feasible(b)
            .cmp(&feasible(a))
            .then_with(|| {
                if feasible(a) {
                    budget.rate(gains[b]).total_cmp(&budget.rate(gains[a]))
                } else {
                    gains[b].total_cmp(&gains[a])
                }
            })
            .then(a.cmp(&b))
    });
    order.truncate(k);
    AccessAction::new(order, n).expect("distinct indices")
}

/// A scheduler that sees the physical state before each slot.
pub trait Scheduler {
    fn name(&self) -> &'static str;
    fn select(&mut self, state: &SystemState) -> AccessAction;
}

#[derive(Debug, Clone)]
pub struct RoundRobin {
    n: usize,
    k: usize,
    state: RoundRobinState,
}

impl RoundRobin {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            state: RoundRobinState::default(),
        }
    }
}

impl Scheduler for RoundRobin {
    fn name(&self) -> &'static str {
        "rr"
    }

    fn select(&mut self, _state: &SystemState) -> AccessAction {
        let (a, s) = round_robin_select(self.state, self.n, self.k);
        self.state = s;
        a
    }
}

pub struct RandomScheduler<R> {
    n: usize,
    k: usize,
    rng: R,
}

impl<R: Rng> RandomScheduler<R> {
    pub fn new(n: usize, k: usize, rng: R) -> Self {
        Self { n, k, rng }
    }
}

impl<R: Rng> Scheduler for RandomScheduler<R> {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(&mut self, _state: &SystemState) -> AccessAction {
        random_select(self.n, self.k, &mut self.rng)
    }
}

#[derive(Debug, Clone)]
pub struct Myopic {
    k: usize,
    tx_power: u32,
    budget: LinkBudget,
}

impl Myopic {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            k: cfg.k_channels,
            tx_power: cfg.tx_power,
            budget: cfg.link_budget(),
        }
    }
}

impl Scheduler for Myopic {
    fn name(&self) -> &'static str {
        "mp"
    }

    fn select(&mut self, state: &SystemState) -> AccessAction {
        myopic_select(&state.batteries(), &state.channel.gains, self.k, self.tx_power, &self.budget)
    }
}
