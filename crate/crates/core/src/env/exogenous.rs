//! Action-independent randomness: UE mobility, fading and energy arrivals.
//!
//! None of these processes depend on the scheduling decisions, so a run's
//! realization is fixed by its seed alone. That is what lets every policy be
//! evaluated on the same realization (common random numbers), and lets the
//! offline benchmarks see the whole future.

use rand::Rng;

use super::battery::sample_energy;
use super::channel::{channel_gain, random_walk_step, sample_fading, Position};
use super::scenario::{ArrivalModel, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rng::RunRng;

/// Exogenous inputs consumed by one slot transition: the energy harvested
/// during slot `t` and the channel gains of slot `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousStep {
    pub arrivals: Vec<u32>,
    pub next_gains: Vec<f64>,
}

pub trait ExogenousSource: Send {
    fn n_ues(&self) -> usize;

    /// Channel gains of the current slot.
    fn gains(&self) -> &[f64];

    /// UE positions, when the source models geometry.
    fn positions(&self) -> Option<&[Position]> {
        None
    }

    /// Per-UE mean arrival rates, when known.
    fn energy_rates(&self) -> Option<&[f64]> {
        None
    }

    /// Draws the arrivals of the current slot and advances to the next one.
    fn advance(&mut self) -> Result<ExogenousStep>;
}

/// Seeded generator for the scenario's mobility, fading and arrival models.
pub struct GeneratedProcess {
    cfg: ScenarioConfig,
    bs: Position,
    positions: Vec<Position>,
    rates: Vec<f64>,
    gains: Vec<f64>,
    /// Fractional energy carried between slots in deterministic mode.
    carry: Vec<f64>,
    t: u64,
    rng: RunRng,
}

impl GeneratedProcess {
    pub fn new(cfg: &ScenarioConfig, mut rng: RunRng) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n_ues;
        let rates = match &cfg.energy_rates {
            Some(r) => r.clone(),
            None => (0..n)
                .map(|_| {
                    cfg.energy_rate_min
                        + rng.random::<f64>() * (cfg.energy_rate_max - cfg.energy_rate_min)
                })
                .collect(),
        };
        let positions: Vec<Position> = (0..n)
            .map(|_| {
                Position::new(
                    rng.random::<f64>() * cfg.cell_size_m,
                    rng.random::<f64>() * cfg.cell_size_m,
                )
            })
            .collect();
        let half = cfg.cell_size_m / 2.0;
        let mut p = Self {
            cfg: cfg.clone(),
            bs: Position::new(half, half),
            positions,
            rates,
            gains: vec![0.0; n],
            carry: vec![0.0; n],
            t: 0,
            rng,
        };
        p.gains = p.draw_gains();
        Ok(p)
    }

    fn draw_gains(&mut self) -> Vec<f64> {
        let n = self.cfg.n_ues;
        (0..n)
            .map(|i| {
                let fading = if self.cfg.fading_enabled {
                    sample_fading(&mut self.rng)
                } else {
                    1.0
                };
                match &self.cfg.fixed_gains_db {
                    Some(db) => 10f64.powf(db[i] / 10.0) * fading,
                    None => channel_gain(&self.positions[i], &self.bs, fading),
                }
            })
            .collect()
    }

    fn draw_arrivals(&mut self) -> Vec<u32> {
        let t = self.t as usize;
        match &self.cfg.arrivals {
            ArrivalModel::Poisson => {
                let rng = &mut self.rng;
                self.rates.iter().map(|&r| sample_energy(r, rng)).collect()
            }
            ArrivalModel::Deterministic => self
                .rates
                .iter()
                .zip(self.carry.iter_mut())
                .map(|(&r, c)| {
                    *c += r;
                    // tolerate accumulated rounding just below an integer
                    let whole = (*c + 1e-9).floor();
                    *c -= whole;
                    whole as u32
                })
                .collect(),
            ArrivalModel::Cyclic(cycle) => cycle[t % cycle.len()].clone(),
        }
    }

    /// Records the next `horizon` slots: `gains[0..=horizon]` and `arrivals[0..horizon]`.
    pub fn record(mut self, horizon: usize) -> Result<ExogenousTrace> {
        let mut gains = Vec::with_capacity(horizon + 1);
        let mut arrivals = Vec::with_capacity(horizon);
        gains.push(self.gains.clone());
        for _ in 0..horizon {
            let step = self.advance()?;
            arrivals.push(step.arrivals);
            gains.push(step.next_gains);
        }
        Ok(ExogenousTrace { gains, arrivals })
    }
}

impl ExogenousSource for GeneratedProcess {
    fn n_ues(&self) -> usize {
        self.cfg.n_ues
    }

    fn gains(&self) -> &[f64] {
        &self.gains
    }

    fn positions(&self) -> Option<&[Position]> {
        if self.cfg.fixed_gains_db.is_some() {
            None
        } else {
            Some(&self.positions)
        }
    }

    fn energy_rates(&self) -> Option<&[f64]> {
        Some(&self.rates)
    }

    fn advance(&mut self) -> Result<ExogenousStep> {
        // Draw order is fixed: arrivals, then mobility, then fading.
        let arrivals = self.draw_arrivals();
        if self.cfg.fixed_gains_db.is_none() {
            let (speed, size) = (self.cfg.ue_speed_mps, self.cfg.cell_size_m);
            for p in self.positions.iter_mut() {
                *p = random_walk_step(*p, speed, size, &mut self.rng);
            }
        }
        self.gains = self.draw_gains();
        self.t += 1;
        Ok(ExogenousStep {
            arrivals,
            next_gains: self.gains.clone(),
        })
    }
}

/// A fully materialized realization over a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousTrace {
    /// `gains[t]` for `t in 0..=horizon`.
    pub gains: Vec<Vec<f64>>,
    /// `arrivals[t]` for `t in 0..horizon`.
    pub arrivals: Vec<Vec<u32>>,
}

impl ExogenousTrace {
    pub fn horizon(&self) -> usize {
        self.arrivals.len()
    }

    pub fn n_ues(&self) -> usize {
        self.gains.first().map_or(0, Vec::len)
    }

    /// Builds a trace with the same gains in every slot.
    pub fn with_fixed_gains(gains: Vec<f64>, arrivals: Vec<Vec<u32>>) -> Self {
        let g = vec![gains; arrivals.len() + 1];
        Self { gains: g, arrivals }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_ues();
        if self.gains.len() != self.arrivals.len() + 1 {
            return Err(Error::Shape(format!(
                "trace has {} gain rows for {} arrival rows",
                self.gains.len(),
                self.arrivals.len()
            )));
        }
        let ok = self.gains.iter().all(|g| g.len() == n && g.iter().all(|x| *x > 0.0 && x.is_finite()))
            && self.arrivals.iter().all(|a| a.len() == n);
        if !ok {
            return Err(Error::Shape("ragged or non-positive trace".into()));
        }
        Ok(())
    }

    /// Replays this trace as an exogenous source.
    pub fn replay(&self) -> TraceReplay {
        TraceReplay {
            trace: self.clone(),
            t: 0,
        }
    }

    /// Restricts to slots `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> ExogenousTrace {
        Self {
            gains: self.gains[start..=start + len].to_vec(),
            arrivals: self.arrivals[start..start + len].to_vec(),
        }
    }
}

pub struct TraceReplay {
    trace: ExogenousTrace,
    t: usize,
}

impl ExogenousSource for TraceReplay {
    fn n_ues(&self) -> usize {
        self.trace.n_ues()
    }

    fn gains(&self) -> &[f64] {
        &self.trace.gains[self.t]
    }

    fn advance(&mut self) -> Result<ExogenousStep> {
        if self.t >= self.trace.horizon() {
            return Err(Error::Shape(format!(
                "scripted trace exhausted after {} slots",
                self.trace.horizon()
            )));
        }
        let arrivals = self.trace.arrivals[self.t].clone();
        self.t += 1;
        Ok(ExogenousStep {
            arrivals,
            next_gains: self.trace.gains[self.t].clone(),
        })
    }
}
