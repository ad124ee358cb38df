use rand::Rng;

use super::action_space::{argmax, ActionSpace};
use crate::env::AccessAction;
use crate::error::{Error, Result};

/// Linear decay from `start` to `end` over `decay_steps`, then flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_steps: 10_000,
        }
    }
}

impl EpsilonSchedule {
    pub fn constant(eps: f64) -> Self {
        Self {
            start: eps,
            end: eps,
            decay_steps: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.end && self.end <= self.start && self.start <= 1.0) {
            return Err(Error::Config(format!(
                "epsilon schedule needs 0 <= end <= start <= 1, got start={} end={}",
                self.start, self.end
            )));
        }
        Ok(())
    }

    pub fn value(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// With probability `epsilon` a uniform index, otherwise the argmax (lowest
/// index on ties).
pub fn epsilon_greedy_select<R: Rng + ?Sized>(q_values: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    if q_values.is_empty() {
        return Err(Error::Empty("q-value row"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Config(format!("epsilon {epsilon} outside [0, 1]")));
    }
    if rng.random::<f64>() < epsilon {
        Ok(rng.random_range(0..q_values.len()))
    } else {
        argmax(q_values)
    }
}

/// Epsilon-greedy over an action space. `q_row` is evaluated lazily so
/// exploratory steps skip the forward pass; the random stream is consumed
/// identically either way apart from the exploratory draw itself.
pub fn select_action<R, F>(space: &ActionSpace, epsilon: f64, rng: &mut R, q_row: F) -> Result<AccessAction>
where
    R: Rng + ?Sized,
    F: FnOnce() -> Result<Vec<f64>>,
{
    if rng.random::<f64>() < epsilon {
        Ok(space.random(rng))
    } else {
        space.greedy(&q_row()?)
    }
}
