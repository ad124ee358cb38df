//! Q-learning with experience replay and a periodically synced target copy.

use std::sync::Arc;

use ndarray::{Array2, Axis};

use super::action_space::ActionSpace;
use crate::env::AccessAction;
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, sgd_step, GradientSet, NetworkParams};

/// One stored interaction. States are shared so consecutive transitions can
/// reference the same snapshot.
#[derive(Debug, Clone)]
pub struct Transition<S, R = f64> {
    pub state: S,
    pub action: AccessAction,
    pub reward: R,
    pub next_state: S,
    pub terminal: bool,
}

/// A network input: `steps x features`, one row per recurrent step.
pub type Sequence = Arc<Array2<f64>>;

pub type AccessTransition = Transition<Sequence>;

/// Stacks per-sample sequences into the per-step `B x F` matrices the
/// network consumes.
pub fn stack_sequences<'a, I>(seqs: I) -> Result<Vec<Array2<f64>>>
where
    I: IntoIterator<Item = &'a Array2<f64>>,
{
    let seqs: Vec<&Array2<f64>> = seqs.into_iter().collect();
    let first = seqs.first().ok_or(Error::Empty("batch"))?;
    let (steps, width) = first.dim();
    if seqs.iter().any(|s| s.dim() != (steps, width)) {
        return Err(Error::Shape("batch sequences differ in shape".into()));
    }
    Ok((0..steps)
        .map(|t| {
            let mut m = Array2::zeros((seqs.len(), width));
            for (mut row, s) in m.axis_iter_mut(Axis(0)).zip(&seqs) {
                row.assign(&s.row(t));
            }
            m
        })
        .collect())
}

/// Wraps a single feature vector as a one-step sequence.
pub fn single_step(features: Vec<f64>) -> Sequence {
    let n = features.len();
    Arc::new(Array2::from_shape_vec((1, n), features).expect("length matches"))
}

/// `y = r` at a terminal step, else `r + gamma * max(q_next)`.
pub fn dqn_target(reward: f64, gamma: f64, q_next: &[f64], terminal: bool) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Online and target Q-networks plus the sync bookkeeping.
#[derive(Debug, Clone)]
pub struct QLearner {
    pub online: NetworkParams,
    pub target: NetworkParams,
    pub space: ActionSpace,
    pub sync_period: u64,
    pub grad_clip: f64,
    updates: u64,
}

impl QLearner {
    pub fn new(online: NetworkParams, space: ActionSpace, sync_period: u64, grad_clip: f64) -> Result<Self> {
        if online.output_size() != space.output_size() {
            return Err(Error::Shape(format!(
                "network has {} outputs, action space needs {}",
                online.output_size(),
                space.output_size()
            )));
        }
        if sync_period == 0 {
            return Err(Error::Config("sync_period must be positive".into()));
        }
        Ok(Self {
            target: online.clone(),
            online,
            space,
            sync_period,
            grad_clip,
            updates: 0,
        })
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn q_values(&self, state: &Array2<f64>) -> Result<Vec<f64>> {
        let inputs = stack_sequences([state])?;
        Ok(self.online.forward(&inputs)?.row(0).to_vec())
    }

    pub fn greedy(&self, state: &Array2<f64>) -> Result<AccessAction> {
        self.space.greedy(&self.q_values(state)?)
    }

    /// TD targets of a batch under the target network.
    pub fn td_targets(&self, batch: &[&AccessTransition], gamma: f64) -> Result<Vec<f64>> {
        let next = stack_sequences(batch.iter().map(|t| t.next_state.as_ref()))?;
        let q_next = self.target.forward(&next)?;
        batch
            .iter()
            .zip(q_next.axis_iter(Axis(0)))
            .map(|(t, row)| {
                let best = self.space.max_value(row.as_slice().expect("standard layout"))?;
                Ok(if t.terminal { t.reward } else { t.reward + gamma * best })
            })
            .collect()
    }

    /// Mean squared TD error of the batch and its gradient with respect to
    /// the online parameters.
    pub fn loss_and_gradients(
        &self,
        params: &NetworkParams,
        batch: &[&AccessTransition],
        targets: &[f64],
    ) -> Result<(f64, GradientSet)> {
        let inputs = stack_sequences(batch.iter().map(|t| t.state.as_ref()))?;
        let (q, cache) = params.forward_cached(&inputs)?;
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut dq = Array2::zeros(q.raw_dim());
        for (b, t) in batch.iter().enumerate() {
            let row = q.row(b);
            let err = targets[b] - self.space.value(row.as_slice().expect("standard layout"), &t.action)?;
            loss += err * err * scale;
            let mut drow = dq.row_mut(b);
            self.space
                .scatter_error(drow.as_slice_mut().expect("standard layout"), &t.action, -2.0 * err * scale)?;
        }
        if !loss.is_finite() {
            return Err(Error::non_finite("dqn loss", format!("loss = {loss}")));
        }
        let (grads, _) = params.backward(&cache, &dq)?;
        Ok((loss, grads))
    }

    /// One SGD step on the mean squared TD error of `batch`; returns the loss
    /// before the step.
    pub fn dqn_update(&mut self, batch: &[&AccessTransition], alpha: f64, gamma: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Empty("training batch"));
        }
        let targets = self.td_targets(batch, gamma)?;
        let (loss, mut grads) = self.loss_and_gradients(&self.online, batch, &targets)?;
        clip_global_norm(&mut [&mut grads], self.grad_clip);
        sgd_step(&mut self.online, &grads, alpha)?;
        self.updates += 1;
        if self.updates.is_multiple_of(self.sync_period) {
            self.sync();
        }
        Ok(loss)
    }

    pub fn sync(&mut self) {
        self.target = self.online.clone();
    }
}
