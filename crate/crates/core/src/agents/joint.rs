//! Two-layer controller: the predictor feeds its battery estimates, together
//! with the current channel gains, into the access-control Q-network. Both
//! layers are trained through one chained gradient.

use ndarray::{concatenate, s, Array2, Axis};

use super::action_space::ActionSpace;
use super::dqn::{stack_sequences, Sequence, Transition};
use super::predictor::{td_errors, td_targets, to_battery_units, PredictionSample};
use crate::env::AccessAction;
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, sgd_step, GradientSet, NetworkParams};

/// `R_t = rate - beta * p_loss`.
pub fn joint_reward(rate: f64, p_loss: f64, beta: f64) -> f64 {
    rate - beta * p_loss
}

/// Joint observation: encoded history for the predictor and scaled gains.
#[derive(Debug, Clone)]
pub struct JointState {
    pub history: Sequence,
    pub gains: Sequence,
}

/// A stored joint transition; `reported` feeds the auxiliary prediction loss.
pub type JointTransition = Transition<JointState>;

#[derive(Debug, Clone)]
pub struct JointSample {
    pub transition: JointTransition,
    pub reported: Vec<f64>,
}

/// Predictor output (battery units, clamped) and Q-row of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOutput {
    pub batteries: Vec<f64>,
    pub raw: Vec<f64>,
    pub q: Vec<f64>,
}

/// Hyperparameters of [`JointAgent::joint_update`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointStep {
    pub alpha: f64,
    pub gamma: f64,
    pub gamma_pred: f64,
    /// Zero the predictor's gradient.
    pub freeze_predictor: bool,
    /// Weight of the TD(0) prediction loss added to the predictor's
    /// objective. Zero trains the predictor through the policy only.
    pub prediction_weight: f64,
}

#[derive(Debug, Clone)]
pub struct JointAgent {
    pub predictor: NetworkParams,
    pub policy: NetworkParams,
    pub target_predictor: NetworkParams,
    pub target_policy: NetworkParams,
    pub space: ActionSpace,
    pub capacity: u32,
    pub sync_period: u64,
    pub grad_clip: f64,
    updates: u64,
}

/// Batch losses and gradients of both layers.
#[derive(Debug, Clone)]
pub struct JointGradients {
    pub q_loss: f64,
    pub prediction_loss: f64,
    pub policy: GradientSet,
    pub predictor: GradientSet,
}

impl JointAgent {
    pub fn new(
        predictor: NetworkParams,
        policy: NetworkParams,
        space: ActionSpace,
        capacity: u32,
        sync_period: u64,
        grad_clip: f64,
    ) -> Result<Self> {
        let n = space.n_ues();
        if predictor.output_size() != n
            || policy.input_size() != 2 * n
            || policy.output_size() != space.output_size()
        {
            return Err(Error::Shape(format!(
                "joint layers must be predictor (.. -> {n}) and policy ({} -> {}), got ({} -> {}) and ({} -> {})",
                2 * n,
                space.output_size(),
                predictor.input_size(),
                predictor.output_size(),
                policy.input_size(),
                policy.output_size()
            )));
        }
        if sync_period == 0 {
            return Err(Error::Config("sync_period must be positive".into()));
        }
        Ok(Self {
            target_predictor: predictor.clone(),
            target_policy: policy.clone(),
            predictor,
            policy,
            space,
            capacity,
            sync_period,
            grad_clip,
            updates: 0,
        })
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// `b = predictor(history)`, `q = policy([b, gains])`.
    pub fn joint_forward(&self, state: &JointState) -> Result<JointOutput> {
        let (raw, q) = chain_forward(&self.predictor, &self.policy, &[state])?;
        let raw = raw.row(0).to_vec();
        Ok(JointOutput {
            batteries: to_battery_units(&raw, self.capacity),
            raw,
            q: q.row(0).to_vec(),
        })
    }

    /// Targets under the target copies of both layers.
    pub fn td_targets(&self, batch: &[&JointSample], gamma: f64) -> Result<Vec<f64>> {
        let next: Vec<&JointState> = batch.iter().map(|s| &s.transition.next_state).collect();
        let (_, q_next) = chain_forward(&self.target_predictor, &self.target_policy, &next)?;
        batch
            .iter()
            .zip(q_next.axis_iter(Axis(0)))
            .map(|(s, row)| {
                let t = &s.transition;
                let best = self.space.max_value(row.as_slice().expect("standard layout"))?;
                Ok(if t.terminal { t.reward } else { t.reward + gamma * best })
            })
            .collect()
    }

    /// Mean squared TD error through both layers, and optionally the
    /// prediction loss on the predictor with frozen `prediction_targets`.
    pub fn loss_and_gradients(
        &self,
        predictor: &NetworkParams,
        policy: &NetworkParams,
        batch: &[&JointSample],
        targets: &[f64],
        prediction: Option<(&[Vec<f64>], f64)>,
    ) -> Result<JointGradients> {
        let n = self.space.n_ues();
        let hist = stack_sequences(batch.iter().map(|s| s.transition.state.history.as_ref()))?;
        let gains = stack_sequences(batch.iter().map(|s| s.transition.state.gains.as_ref()))?;
        let (b_raw, pred_cache) = predictor.forward_cached(&hist)?;
        let policy_in = concatenate(Axis(1), &[b_raw.view(), gains[0].view()])
            .map_err(|e| Error::Shape(e.to_string()))?;
        let (q, policy_cache) = policy.forward_cached(&[policy_in])?;

        let scale = 1.0 / batch.len() as f64;
        let mut q_loss = 0.0;
        let mut dq = Array2::zeros(q.raw_dim());
        for (b, s) in batch.iter().enumerate() {
            let a = &s.transition.action;
            let err = targets[b] - self.space.value(q.row(b).as_slice().expect("standard layout"), a)?;
            q_loss += err * err * scale;
            let mut drow = dq.row_mut(b);
            self.space
                .scatter_error(drow.as_slice_mut().expect("standard layout"), a, -2.0 * err * scale)?;
        }
        let (policy_grads, dx) = policy.backward(&policy_cache, &dq)?;
        let mut db = dx[0].slice(s![.., ..n]).to_owned();

        let mut prediction_loss = 0.0;
        if let Some((pt, weight)) = prediction {
            let samples = prediction_samples(batch);
            let (signal, _, loss) = td_errors(&b_raw, &samples, pt, self.capacity);
            db.scaled_add(weight, &signal);
            prediction_loss = loss;
        }
        if !(q_loss.is_finite() && prediction_loss.is_finite()) {
            return Err(Error::non_finite(
                "joint loss",
                format!("q loss = {q_loss}, prediction loss = {prediction_loss}"),
            ));
        }
        let (predictor_grads, _) = predictor.backward(&pred_cache, &db)?;
        Ok(JointGradients {
            q_loss,
            prediction_loss,
            policy: policy_grads,
            predictor: predictor_grads,
        })
    }

    /// One SGD step on both layers. Returns `(q_loss, prediction_loss)`
    /// before the step.
    pub fn joint_update(&mut self, batch: &[&JointSample], step: JointStep) -> Result<(f64, f64)> {
        if batch.is_empty() {
            return Err(Error::Empty("training batch"));
        }
        let targets = self.td_targets(batch, step.gamma)?;
        let pred_targets = if step.prediction_weight > 0.0 && !step.freeze_predictor {
            Some(td_targets(
                &self.predictor,
                &prediction_samples(batch),
                step.gamma_pred,
                self.capacity,
            )?)
        } else {
            None
        };
        let mut g = self.loss_and_gradients(
            &self.predictor,
            &self.policy,
            batch,
            &targets,
            pred_targets.as_deref().map(|t| (t, step.prediction_weight)),
        )?;
        if step.freeze_predictor {
            clip_global_norm(&mut [&mut g.policy], self.grad_clip);
        } else {
            clip_global_norm(&mut [&mut g.policy, &mut g.predictor], self.grad_clip);
            sgd_step(&mut self.predictor, &g.predictor, step.alpha)?;
        }
        sgd_step(&mut self.policy, &g.policy, step.alpha)?;
        self.updates += 1;
        if self.updates.is_multiple_of(self.sync_period) {
            self.target_predictor = self.predictor.clone();
            self.target_policy = self.policy.clone();
        }
        Ok((g.q_loss, g.prediction_loss))
    }

    pub fn greedy(&self, state: &JointState) -> Result<AccessAction> {
        self.space.greedy(&self.joint_forward(state)?.q)
    }
}

fn prediction_samples<'a>(batch: &[&'a JointSample]) -> Vec<PredictionSample<'a>> {
    batch
        .iter()
        .map(|s| PredictionSample {
            state: s.transition.state.history.as_ref(),
            selected: &s.transition.action,
            reported: &s.reported,
            next_state: s.transition.next_state.history.as_ref(),
        })
        .collect()
}

/// Raw predictor output and Q-values for a batch of states.
pub fn chain_forward(
    predictor: &NetworkParams,
    policy: &NetworkParams,
    states: &[&JointState],
) -> Result<(Array2<f64>, Array2<f64>)> {
    let hist = stack_sequences(states.iter().map(|s| s.history.as_ref()))?;
    let gains = stack_sequences(states.iter().map(|s| s.gains.as_ref()))?;
    let b_raw = predictor.forward(&hist)?;
    let policy_in =
        concatenate(Axis(1), &[b_raw.view(), gains[0].view()]).map_err(|e| Error::Shape(e.to_string()))?;
    let q = policy.forward(&[policy_in])?;
    Ok((b_raw, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::dqn::single_step;
    use crate::agents::history::HistoryWindow;
    use crate::nn::{weight_init, Activation, NetworkShape};
    use crate::rng::stream_rng;
    use std::sync::Arc;

    const N: usize = 3;

    fn agent(seed: u64) -> JointAgent {
        let mut rng = stream_rng(seed, 0);
        let space = ActionSpace::new(N, 1, false, 10).unwrap();
        let pred = weight_init(
            NetworkShape {
                input_size: 3 * N,
                hidden_size: 4,
                output_size: N,
                activation: Activation::Identity,
            },
            &mut rng,
        );
        let pol = weight_init(
            NetworkShape {
                input_size: 2 * N,
                hidden_size: 5,
                output_size: N,
                activation: Activation::Identity,
            },
            &mut rng,
        );
        JointAgent::new(pred, pol, space, 4, 100, 0.0).unwrap()
    }

    fn state(report: f64, gain: f64) -> JointState {
        let h = HistoryWindow::zeros(N, 1, 2)
            .update(&[0.0, 1.0, 0.0], &[1.0, 1.0, 1.0], &[report])
            .unwrap();
        JointState {
            history: Arc::new(h.encode(4)),
            gains: single_step(vec![gain; N]),
        }
    }

    #[test]
    fn reward_rule() {
        assert!((joint_reward(10.0, 0.05, 100.0) - 5.0).abs() < 1e-12);
        assert_eq!(joint_reward(7.0, 0.0, 100.0), 7.0);
    }

    #[test]
    fn shapes_and_sensitivity() {
        let a = agent(1);
        let o = a.joint_forward(&state(1.0, 0.2)).unwrap();
        assert_eq!(o.q.len(), 3);
        assert_eq!(o.batteries.len(), N);
        let o2 = a.joint_forward(&state(3.0, 0.2)).unwrap();
        assert_ne!(o.raw, o2.raw);
    }

    #[test]
    fn perfect_match_is_stationary() {
        let mut a = agent(2);
        let s = state(2.0, -0.3);
        let act = AccessAction::new(vec![1], N).unwrap();
        let q = a.joint_forward(&s).unwrap().q[1];
        let sample = JointSample {
            transition: Transition {
                state: s.clone(),
                action: act,
                reward: q,
                next_state: s,
                terminal: true,
            },
            reported: vec![2.0],
        };
        let before = (a.predictor.flatten(), a.policy.flatten());
        let step = JointStep {
            alpha: 0.1,
            gamma: 0.9,
            gamma_pred: 0.0,
            freeze_predictor: false,
            prediction_weight: 0.0,
        };
        let (loss, _) = a.joint_update(&[&sample], step).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!((a.predictor.flatten(), a.policy.flatten()), before);
    }
}
