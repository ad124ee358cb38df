//! The multi-user energy-harvesting uplink.
//!
//! One slot proceeds as: the BS picks `K` UEs; every picked UE whose battery
//! covers the transmit power sends (and reports its battery level); all UEs
//! then store the energy harvested during the slot, which becomes usable in
//! the next slot; finally UEs move and channels are redrawn.

pub mod action;
pub mod battery;
pub mod channel;
pub mod exogenous;
pub mod metrics;
pub mod scenario;

pub use action::AccessAction;
pub use battery::{battery_step, sample_energy, transmit_indicator};
pub use channel::{channel_gain, pathloss_db, random_walk_step, ChannelSnapshot, Position};
pub use exogenous::{ExogenousSource, ExogenousStep, ExogenousTrace, GeneratedProcess, TraceReplay};
pub use metrics::{prediction_loss, sum_rate};
pub use scenario::{ArrivalModel, LinkBudget, ScenarioConfig};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_ENV};

/// Per-UE physical state.
#[derive(Debug, Clone, PartialEq)]
pub struct UeState {
    pub position: Option<Position>,
    pub battery: u32,
    pub energy_rate: Option<f64>,
}

/// Snapshot of the physical system at the start of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: u64,
    pub ues: Vec<UeState>,
    pub channel: ChannelSnapshot,
}

impl SystemState {
    pub fn batteries(&self) -> Vec<u32> {
        self.ues.iter().map(|u| u.battery).collect()
    }

    pub fn n_ues(&self) -> usize {
        self.ues.len()
    }
}

/// Result of executing one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Sum rate of the slot, in rate units.
    pub sum_rate: f64,
    /// `z_i` for each selected UE, in the action's (ascending) order.
    pub transmit_flags: Vec<u8>,
    /// Battery levels reported by the selected UEs, same order.
    pub true_batteries_selected: Vec<u32>,
    /// Energy harvested by every UE during the slot.
    pub arrivals: Vec<u32>,
}

/// Pure slot transition given the exogenous inputs of the slot.
pub fn env_step(
    state: &SystemState,
    action: &AccessAction,
    exo: &ExogenousStep,
    cfg: &ScenarioConfig,
    budget: &LinkBudget,
) -> Result<(StepOutcome, SystemState)> {
    let n = state.n_ues();
    if action.len() != cfg.k_channels || action.selected().iter().any(|&i| i >= n) {
        return Err(Error::InvalidAction(format!(
            "action {:?} invalid for N={n}, K={}",
            action.selected(),
            cfg.k_channels
        )));
    }
    if exo.arrivals.len() != n || exo.next_gains.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: exo.arrivals.len().min(exo.next_gains.len()),
        });
    }
    let flags: Vec<u8> = state
        .ues
        .iter()
        .map(|u| transmit_indicator(u.battery, cfg.tx_power))
        .collect();
    let rate = sum_rate(action, &flags, &state.channel, budget);
    let sel = action.selected();
    let indicators = action.indicators(n);
    let ues = state
        .ues
        .iter()
        .enumerate()
        .map(|(i, u)| UeState {
            position: u.position,
            battery: battery_step(
                u.battery,
                exo.arrivals[i],
                flags[i],
                indicators[i],
                cfg.tx_power,
                cfg.battery_capacity,
            ),
            energy_rate: u.energy_rate,
        })
        .collect();
    let outcome = StepOutcome {
        sum_rate: rate,
        transmit_flags: sel.iter().map(|&i| flags[i]).collect(),
        true_batteries_selected: sel.iter().map(|&i| state.ues[i].battery).collect(),
        arrivals: exo.arrivals.clone(),
    };
    let next = SystemState {
        t: state.t + 1,
        ues,
        channel: ChannelSnapshot::new(exo.next_gains.clone()),
    };
    Ok((outcome, next))
}

/// A running simulation: physical state plus its exogenous source.
pub struct Environment {
    cfg: ScenarioConfig,
    budget: LinkBudget,
    state: SystemState,
    source: Box<dyn ExogenousSource>,
}

impl Environment {
    /// Environment driven by the scenario's generated processes, seeded from
    /// the run seed's environment stream.
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        let process = GeneratedProcess::new(cfg, stream_rng(seed, STREAM_ENV))?;
        Self::from_source(cfg, Box::new(process))
    }

    pub fn from_source(cfg: &ScenarioConfig, source: Box<dyn ExogenousSource>) -> Result<Self> {
        cfg.validate()?;
        Self::with_batteries(cfg, source, vec![cfg.initial_battery; cfg.n_ues])
    }

    pub fn with_batteries(
        cfg: &ScenarioConfig,
        source: Box<dyn ExogenousSource>,
        batteries: Vec<u32>,
    ) -> Result<Self> {
        cfg.validate()?;
        if source.n_ues() != cfg.n_ues || batteries.len() != cfg.n_ues {
            return Err(Error::Shape(format!(
                "source has {} UEs and {} initial batteries, scenario has {}",
                source.n_ues(),
                batteries.len(),
                cfg.n_ues
            )));
        }
        if batteries.iter().any(|&b| b > cfg.battery_capacity) {
            return Err(Error::Config("initial battery above capacity".into()));
        }
        let ues = (0..cfg.n_ues)
            .map(|i| UeState {
                position: source.positions().map(|p| p[i]),
                battery: batteries[i],
                energy_rate: source.energy_rates().map(|r| r[i]),
            })
            .collect();
        let state = SystemState {
            t: 0,
            ues,
            channel: ChannelSnapshot::new(source.gains().to_vec()),
        };
        Ok(Self {
            cfg: cfg.clone(),
            budget: cfg.link_budget(),
            state,
            source,
        })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn budget(&self) -> &LinkBudget {
        &self.budget
    }

    pub fn step(&mut self, action: &AccessAction) -> Result<StepOutcome> {
        let exo = self.source.advance()?;
        let (outcome, mut next) = env_step(&self.state, action, &exo, &self.cfg, &self.budget)?;
        if let Some(pos) = self.source.positions() {
            for (u, p) in next.ues.iter_mut().zip(pos) {
                u.position = Some(*p);
            }
        }
        self.state = next;
        Ok(outcome)
    }
}
