//! Finite-difference checks of the three training losses on small random
//! problems.

use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;

use super::action_space::ActionSpace;
use super::dqn::{AccessTransition, QLearner, Transition};
use super::joint::{JointAgent, JointSample, JointState};
use super::predictor::{prediction_gradients, PredictionSample};
use crate::env::AccessAction;
use crate::error::Result;
use crate::nn::{finite_diff_gradcheck, weight_init, Activation, GradcheckReport, NetworkParams, NetworkShape};
use crate::rng::{stream_rng, RunRng, STREAM_INIT};

/// Which loss a check exercised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckedNetwork {
    /// DQN loss of the access-control network.
    Access,
    /// TD(0) loss of the battery predictor with frozen targets.
    Predictor,
    /// Joint loss through policy and predictor.
    Joint,
}

impl CheckedNetwork {
    pub const ALL: [CheckedNetwork; 3] = [CheckedNetwork::Access, CheckedNetwork::Predictor, CheckedNetwork::Joint];

    pub fn name(self) -> &'static str {
        match self {
            CheckedNetwork::Access => "access",
            CheckedNetwork::Predictor => "predictor",
            CheckedNetwork::Joint => "joint",
        }
    }
}

/// Problem size of a check. Kept small so that every parameter is probed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckSetup {
    pub n_ues: usize,
    pub k: usize,
    pub hidden: usize,
    pub window: usize,
    pub batch: usize,
    pub capacity: u32,
    pub factorized: bool,
    pub prediction_weight: f64,
    pub epsilon: f64,
}

impl Default for GradcheckSetup {
    fn default() -> Self {
        Self {
            n_ues: 4,
            k: 2,
            hidden: 5,
            window: 3,
            batch: 3,
            capacity: 5,
            factorized: false,
            prediction_weight: 1.0,
            epsilon: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckRow {
    pub seed: u64,
    pub network: CheckedNetwork,
    pub report: GradcheckReport,
}

fn random_matrix(rows: usize, cols: usize, rng: &mut RunRng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

fn random_net(input: usize, hidden: usize, output: usize, rng: &mut RunRng) -> NetworkParams {
    let shape = NetworkShape {
        input_size: input,
        hidden_size: hidden,
        output_size: output,
        activation: Activation::Identity,
    };
    let mut p = weight_init(shape, rng);
    // Non-zero biases so that their gradients are exercised too.
    p.lstm.b.mapv_inplace(|b| b + rng.random_range(-0.5..0.5));
    p.dense.b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    p
}

fn random_action(setup: &GradcheckSetup, rng: &mut RunRng) -> AccessAction {
    let selected = rand::seq::index::sample(rng, setup.n_ues, setup.k).into_vec();
    AccessAction::new(selected, setup.n_ues).expect("valid subset")
}

fn space(setup: &GradcheckSetup) -> Result<ActionSpace> {
    ActionSpace::new(setup.n_ues, setup.k, setup.factorized, usize::MAX)
}

pub fn check_access(setup: &GradcheckSetup, seed: u64) -> Result<GradcheckReport> {
    let mut rng = stream_rng(seed, STREAM_INIT);
    let space = space(setup)?;
    let n = setup.n_ues;
    let net = random_net(2 * n, setup.hidden, space.output_size(), &mut rng);
    let learner = QLearner::new(net, space, 1, 0.0)?;
    let batch: Vec<AccessTransition> = (0..setup.batch)
        .map(|_| Transition {
            state: Arc::new(random_matrix(setup.window, 2 * n, &mut rng)),
            action: random_action(setup, &mut rng),
            reward: 0.0,
            next_state: Arc::new(Array2::zeros((setup.window, 2 * n))),
            terminal: true,
        })
        .collect();
    let refs: Vec<&AccessTransition> = batch.iter().collect();
    let targets: Vec<f64> = (0..setup.batch).map(|_| rng.random_range(-2.0..2.0)).collect();
    let (_, grads) = learner.loss_and_gradients(&learner.online, &refs, &targets)?;
    let mut probe = learner.online.clone();
    finite_diff_gradcheck(
        &learner.online.flatten(),
        &grads.flatten(),
        |theta| {
            probe.set_flat(theta).expect("same length");
            learner.loss_and_gradients(&probe, &refs, &targets).expect("valid batch").0
        },
        setup.epsilon,
    )
}

pub fn check_predictor(setup: &GradcheckSetup, seed: u64) -> Result<GradcheckReport> {
    let mut rng = stream_rng(seed, STREAM_INIT);
    let n = setup.n_ues;
    let net = random_net(3 * n, setup.hidden, n, &mut rng);
    let states: Vec<Array2<f64>> = (0..setup.batch)
        .map(|_| random_matrix(setup.window, 3 * n, &mut rng))
        .collect();
    let actions: Vec<AccessAction> = (0..setup.batch).map(|_| random_action(setup, &mut rng)).collect();
    let reported: Vec<Vec<f64>> = (0..setup.batch).map(|_| vec![0.0; setup.k]).collect();
    let batch: Vec<PredictionSample<'_>> = (0..setup.batch)
        .map(|b| PredictionSample {
            state: &states[b],
            selected: &actions[b],
            reported: &reported[b],
            next_state: &states[b],
        })
        .collect();
    let targets: Vec<Vec<f64>> = (0..setup.batch)
        .map(|_| (0..setup.k).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let (_, grads, _) = prediction_gradients(&net, &batch, &targets, setup.capacity)?;
    let mut probe = net.clone();
    finite_diff_gradcheck(
        &net.flatten(),
        &grads.flatten(),
        |theta| {
            probe.set_flat(theta).expect("same length");
            prediction_gradients(&probe, &batch, &targets, setup.capacity)
                .expect("valid batch")
                .0
        },
        setup.epsilon,
    )
}

/// Checks the gradient of `q_loss + prediction_weight * prediction_loss`
/// over the predictor and policy parameters together.
pub fn check_joint(setup: &GradcheckSetup, seed: u64) -> Result<GradcheckReport> {
    let mut rng = stream_rng(seed, STREAM_INIT);
    let space = space(setup)?;
    let n = setup.n_ues;
    let predictor = random_net(3 * n, setup.hidden, n, &mut rng);
    let policy = random_net(2 * n, setup.hidden, space.output_size(), &mut rng);
    let agent = JointAgent::new(predictor, policy, space, setup.capacity, 1, 0.0)?;
    let batch: Vec<JointSample> = (0..setup.batch)
        .map(|_| {
            let state = JointState {
                history: Arc::new(random_matrix(setup.window, 3 * n, &mut rng)),
                gains: Arc::new(random_matrix(1, n, &mut rng)),
            };
            JointSample {
                transition: Transition {
                    state: state.clone(),
                    action: random_action(setup, &mut rng),
                    reward: 0.0,
                    next_state: state,
                    terminal: true,
                },
                reported: vec![0.0; setup.k],
            }
        })
        .collect();
    let refs: Vec<&JointSample> = batch.iter().collect();
    let targets: Vec<f64> = (0..setup.batch).map(|_| rng.random_range(-2.0..2.0)).collect();
    let pred_targets: Vec<Vec<f64>> = (0..setup.batch)
        .map(|_| (0..setup.k).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let w = setup.prediction_weight;
    let loss = |pred: &NetworkParams, pol: &NetworkParams| -> Result<(f64, Vec<f64>)> {
        let g = agent.loss_and_gradients(pred, pol, &refs, &targets, Some((&pred_targets, w)))?;
        let mut flat = g.predictor.flatten();
        flat.extend(g.policy.flatten());
        Ok((g.q_loss + w * g.prediction_loss, flat))
    };
    let (_, analytic) = loss(&agent.predictor, &agent.policy)?;
    let split = agent.predictor.num_params();
    let mut theta = agent.predictor.flatten();
    theta.extend(agent.policy.flatten());
    let (mut pred, mut pol) = (agent.predictor.clone(), agent.policy.clone());
    finite_diff_gradcheck(
        &theta,
        &analytic,
        |t| {
            pred.set_flat(&t[..split]).expect("same length");
            pol.set_flat(&t[split..]).expect("same length");
            loss(&pred, &pol).expect("valid batch").0
        },
        setup.epsilon,
    )
}

pub fn check(network: CheckedNetwork, setup: &GradcheckSetup, seed: u64) -> Result<GradcheckReport> {
    match network {
        CheckedNetwork::Access => check_access(setup, seed),
        CheckedNetwork::Predictor => check_predictor(setup, seed),
        CheckedNetwork::Joint => check_joint(setup, seed),
    }
}

/// Every network over seeds `0..seeds`.
pub fn run_gradchecks(setup: &GradcheckSetup, seeds: u64) -> Result<Vec<GradcheckRow>> {
    let mut rows = Vec::new();
    for seed in 0..seeds {
        for network in CheckedNetwork::ALL {
            rows.push(GradcheckRow {
                seed,
                network,
                report: check(network, setup, seed)?,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_networks_pass_on_ten_seeds() {
        for factorized in [false, true] {
            let setup = GradcheckSetup {
                factorized,
                ..Default::default()
            };
            for row in run_gradchecks(&setup, 10).unwrap() {
                assert!(row.report.max_rel_error < 1e-5, "{factorized} {row:?}");
            }
        }
    }

    #[test]
    fn joint_covers_both_layers() {
        let setup = GradcheckSetup::default();
        let r = check_joint(&setup, 0).unwrap();
        let n = setup.n_ues;
        let pred = 4 * setup.hidden * (3 * n + setup.hidden) + 4 * setup.hidden + n * setup.hidden + n;
        let out = 6;
        let pol = 4 * setup.hidden * (2 * n + setup.hidden) + 4 * setup.hidden + out * setup.hidden + out;
        assert_eq!(r.n_params, pred + pol);
    }
}
