//! Training loops for the three learning agents.

use std::sync::Arc;

use super::action_space::ActionSpace;
use super::dqn::{single_step, QLearner, Sequence, Transition};
use super::exploration::{select_action, EpsilonSchedule};
use super::features::FeatureScaler;
use super::history::HistoryWindow;
use super::joint::{joint_reward, JointAgent, JointSample, JointState, JointStep};
use super::predictor::{predict_batteries, td0_update, PredictionSample};
use super::replay::ReplayBuffer;
use crate::baselines::{round_robin_select, RoundRobinState};
use crate::env::{prediction_loss, Environment, ScenarioConfig};
use crate::error::{Error, Result};
use crate::nn::{weight_init, Activation, NetworkParams, NetworkShape};
use crate::rng::{stream_rng, RunRng, STREAM_AGENT, STREAM_INIT};

/// Learning hyperparameters shared by the three agents.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub gamma_pred: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Transitions stored before the first update; at least one.
    pub warmup: usize,
    pub lstm_units: usize,
    pub history_window: usize,
    pub beta: f64,
    pub epsilon: EpsilonSchedule,
    pub sync_period: u64,
    pub episode_length: u64,
    /// Number of episodes for the joint agent; 0 derives it from `total_steps`.
    pub episodes: u64,
    pub total_steps: u64,
    pub grad_clip: f64,
    pub action_cap: usize,
    pub factorized_actions: bool,
    pub gain_db_min: f64,
    pub gain_db_max: f64,
    /// Multiplies rewards before they enter the TD targets; logged rewards
    /// are unscaled.
    pub reward_scale: f64,
    /// Weight of the joint predictor's own TD(0) loss; 0 leaves only the
    /// gradient arriving through the policy.
    pub joint_prediction_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gamma_pred: 0.9,
            learning_rate: 1e-4,
            batch_size: 16,
            replay_capacity: 100_000,
            warmup: 16,
            lstm_units: 128,
            history_window: 10,
            beta: 100.0,
            epsilon: EpsilonSchedule::default(),
            sync_period: 100,
            episode_length: 200,
            episodes: 0,
            total_steps: 20_000,
            grad_clip: 10.0,
            action_cap: super::action_space::DEFAULT_ACTION_CAP,
            factorized_actions: false,
            gain_db_min: -130.0,
            gain_db_max: -50.0,
            reward_scale: 1.0,
            joint_prediction_weight: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(0.0..1.0).contains(&self.gamma_pred) {
            return bad(format!("gamma_pred must lie in [0, 1), got {}", self.gamma_pred));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 || self.replay_capacity == 0 || self.lstm_units == 0 || self.history_window == 0 {
            return bad("batch_size, replay_capacity, lstm_units and history_window must be positive".into());
        }
        if self.warmup == 0 {
            return bad("warmup must be at least 1".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        if self.sync_period == 0 || self.episode_length == 0 {
            return bad("sync_period and episode_length must be positive".into());
        }
        if !(self.grad_clip >= 0.0) {
            return bad("grad_clip must be nonnegative (0 disables)".into());
        }
        if !(self.gain_db_min < self.gain_db_max) {
            return bad("gain_db_min must be below gain_db_max".into());
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward_scale must be positive".into());
        }
        if !(self.joint_prediction_weight >= 0.0 && self.joint_prediction_weight.is_finite()) {
            return bad("joint_prediction_weight must be nonnegative".into());
        }
        self.epsilon.validate()
    }

    /// Steps the joint agent runs: `episodes * episode_length` when
    /// `episodes` is set, else `total_steps`.
    pub fn joint_steps(&self) -> u64 {
        if self.episodes > 0 {
            self.episodes * self.episode_length
        } else {
            self.total_steps
        }
    }

    pub fn scaler(&self, scenario: &ScenarioConfig) -> Result<FeatureScaler> {
        FeatureScaler::new(scenario.battery_capacity, self.gain_db_min, self.gain_db_max)
    }

    pub fn action_space(&self, scenario: &ScenarioConfig) -> Result<ActionSpace> {
        ActionSpace::new(scenario.n_ues, scenario.k_channels, self.factorized_actions, self.action_cap)
    }
}

/// One row of a training or rollout log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub episode: u64,
    /// Reward the algorithm optimizes: sum rate, or sum rate minus the
    /// prediction penalty for the joint agent.
    pub reward: f64,
    pub sum_rate: f64,
    pub p_loss: Option<f64>,
    pub train_loss: Option<f64>,
    pub epsilon: Option<f64>,
}

pub struct AccessRun {
    pub records: Vec<StepRecord>,
    pub learner: QLearner,
}

pub struct PredictRun {
    pub records: Vec<StepRecord>,
    pub predictor: NetworkParams,
}

pub struct JointRun {
    pub records: Vec<StepRecord>,
    pub agent: JointAgent,
}

fn network(input: usize, units: usize, output: usize, rng: &mut RunRng) -> NetworkParams {
    weight_init(
        NetworkShape {
            input_size: input,
            hidden_size: units,
            output_size: output,
            activation: Activation::Identity,
        },
        rng,
    )
}

fn access_state(scaler: &FeatureScaler, env: &Environment) -> Sequence {
    let s = env.state();
    single_step(scaler.access_state(&s.channel.gains, &s.batteries()))
}

/// Fresh access learner for a scenario, initialized from the seed's init stream.
pub fn new_access_learner(scenario: &ScenarioConfig, cfg: &TrainConfig, seed: u64) -> Result<QLearner> {
    let space = cfg.action_space(scenario)?;
    let mut init = stream_rng(seed, STREAM_INIT);
    let net = network(2 * scenario.n_ues, cfg.lstm_units, space.output_size(), &mut init);
    QLearner::new(net, space, cfg.sync_period, cfg.grad_clip)
}

/// Access control by DQN on the seed's environment.
pub fn train_access(scenario: &ScenarioConfig, cfg: &TrainConfig, seed: u64) -> Result<AccessRun> {
    let mut records = Vec::with_capacity(cfg.total_steps as usize);
    let learner = train_access_in(Environment::new(scenario, seed)?, cfg, seed, &mut records)?;
    Ok(AccessRun { records, learner })
}

/// Access control by DQN on a prepared environment. The state is the scaled
/// channel gains and batteries of the current slot. Rows are appended to
/// `log` as they are produced, so it holds the partial run on error.
pub fn train_access_in(
    mut env: Environment,
    cfg: &TrainConfig,
    seed: u64,
    log: &mut Vec<StepRecord>,
) -> Result<QLearner> {
    cfg.validate()?;
    let scenario = env.scenario().clone();
    let scaler = cfg.scaler(&scenario)?;
    let mut learner = new_access_learner(&scenario, cfg, seed)?;
    let mut rng = stream_rng(seed, STREAM_AGENT);
    let mut replay = ReplayBuffer::new(cfg.replay_capacity)?;
    let mut state = access_state(&scaler, &env);
    for step in 0..cfg.total_steps {
        let eps = cfg.epsilon.value(step);
        let action = select_action(&learner.space, eps, &mut rng, || learner.q_values(&state))?;
        let out = env.step(&action)?;
        let next = access_state(&scaler, &env);
        replay.push(Transition {
            state,
            action,
            reward: out.sum_rate * cfg.reward_scale,
            next_state: Arc::clone(&next),
            terminal: step + 1 == cfg.total_steps,
        });
        let train_loss = if replay.len() >= cfg.warmup {
            let batch = replay.sample(cfg.batch_size, &mut rng)?;
            Some(learner.dqn_update(&batch, cfg.learning_rate, cfg.gamma)?)
        } else {
            None
        };
        log.push(StepRecord {
            step,
            episode: step / cfg.episode_length,
            reward: out.sum_rate,
            sum_rate: out.sum_rate,
            p_loss: None,
            train_loss,
            epsilon: Some(eps),
        });
        state = next;
    }
    Ok(learner)
}

/// Greedy rollout of a trained access learner; returns per-slot sum rates.
pub fn rollout_access(learner: &QLearner, scaler: &FeatureScaler, env: &mut Environment, steps: usize) -> Result<Vec<f64>> {
    (0..steps)
        .map(|_| {
            let a = learner.greedy(&access_state(scaler, env))?;
            Ok(env.step(&a)?.sum_rate)
        })
        .collect()
}

type PredictTransition = Transition<Sequence, Vec<f64>>;

/// Battery prediction under round-robin scheduling, trained by TD(0).
pub fn train_predict(scenario: &ScenarioConfig, cfg: &TrainConfig, seed: u64) -> Result<PredictRun> {
    let mut records = Vec::with_capacity(cfg.total_steps as usize);
    let predictor = train_predict_in(Environment::new(scenario, seed)?, cfg, seed, &mut records)?;
    Ok(PredictRun { records, predictor })
}

pub fn train_predict_in(
    mut env: Environment,
    cfg: &TrainConfig,
    seed: u64,
    log: &mut Vec<StepRecord>,
) -> Result<NetworkParams> {
    cfg.validate()?;
    let scenario = env.scenario().clone();
    let (n, k, c) = (scenario.n_ues, scenario.k_channels, scenario.battery_capacity);
    let mut init = stream_rng(seed, STREAM_INIT);
    let mut predictor = network(3 * n, cfg.lstm_units, n, &mut init);
    let mut rng = stream_rng(seed, STREAM_AGENT);
    let mut replay: ReplayBuffer<PredictTransition> = ReplayBuffer::new(cfg.replay_capacity)?;
    let mut rr = RoundRobinState::default();
    let mut history = HistoryWindow::zeros(n, k, cfg.history_window);
    let mut encoded = Arc::new(history.encode(c));
    for step in 0..cfg.total_steps {
        let predicted = predict_batteries(&predictor, &encoded, c)?;
        let (action, next_rr) = round_robin_select(rr, n, k);
        rr = next_rr;
        let out = env.step(&action)?;
        let reported: Vec<f64> = out.true_batteries_selected.iter().map(|&b| b as f64).collect();
        let on_selected: Vec<f64> = action.selected().iter().map(|&i| predicted[i]).collect();
        let p_loss = prediction_loss(&reported, &on_selected)?;
        let indicators: Vec<f64> = action.indicators(n).iter().map(|&x| x as f64).collect();
        history = history.update(&indicators, &predicted, &reported)?;
        let next = Arc::new(history.encode(c));
        replay.push(Transition {
            state: encoded,
            action,
            reward: reported,
            next_state: Arc::clone(&next),
            terminal: false,
        });
        let train_loss = if replay.len() >= cfg.warmup {
            let batch = replay.sample(cfg.batch_size, &mut rng)?;
            let samples: Vec<PredictionSample<'_>> = batch
                .iter()
                .map(|t| PredictionSample {
                    state: &t.state,
                    selected: &t.action,
                    reported: &t.reward,
                    next_state: &t.next_state,
                })
                .collect();
            let td = td0_update(&mut predictor, &samples, cfg.learning_rate, cfg.gamma_pred, c, cfg.grad_clip)?;
            Some(td.iter().map(|d| d.iter().map(|x| x * x).sum::<f64>()).sum::<f64>() / td.len() as f64)
        } else {
            None
        };
        log.push(StepRecord {
            step,
            episode: step / cfg.episode_length,
            reward: out.sum_rate,
            sum_rate: out.sum_rate,
            p_loss: Some(p_loss),
            train_loss,
            epsilon: None,
        });
        encoded = next;
    }
    Ok(predictor)
}

/// Fresh joint agent, initialized from the seed's init stream.
pub fn new_joint_agent(scenario: &ScenarioConfig, cfg: &TrainConfig, seed: u64) -> Result<JointAgent> {
    let n = scenario.n_ues;
    let space = cfg.action_space(scenario)?;
    let mut init = stream_rng(seed, STREAM_INIT);
    let predictor = network(3 * n, cfg.lstm_units, n, &mut init);
    let policy = network(2 * n, cfg.lstm_units, space.output_size(), &mut init);
    JointAgent::new(
        predictor,
        policy,
        space,
        scenario.battery_capacity,
        cfg.sync_period,
        cfg.grad_clip,
    )
}

/// Joint prediction and access control. Batteries are never observed at
/// decision time; only the reports of scheduled UEs enter the history.
///
/// Episodes of `episode_length` slots end with a terminal transition and
/// restart the history window from zeros; the physical system carries on.
pub fn train_joint(scenario: &ScenarioConfig, cfg: &TrainConfig, seed: u64) -> Result<JointRun> {
    let mut records = Vec::with_capacity(cfg.joint_steps() as usize);
    let agent = train_joint_in(Environment::new(scenario, seed)?, cfg, seed, &mut records)?;
    Ok(JointRun { records, agent })
}

pub fn train_joint_in(
    mut env: Environment,
    cfg: &TrainConfig,
    seed: u64,
    log: &mut Vec<StepRecord>,
) -> Result<JointAgent> {
    cfg.validate()?;
    let scenario = env.scenario().clone();
    let (n, k, c) = (scenario.n_ues, scenario.k_channels, scenario.battery_capacity);
    let scaler = cfg.scaler(&scenario)?;
    let mut agent = new_joint_agent(&scenario, cfg, seed)?;
    let mut rng = stream_rng(seed, STREAM_AGENT);
    let mut replay: ReplayBuffer<JointSample> = ReplayBuffer::new(cfg.replay_capacity)?;
    let total = cfg.joint_steps();
    let t_len = cfg.episode_length;
    let step_cfg = JointStep {
        alpha: cfg.learning_rate,
        gamma: cfg.gamma,
        gamma_pred: cfg.gamma_pred,
        freeze_predictor: false,
        prediction_weight: cfg.joint_prediction_weight,
    };
    let gains_now = |env: &Environment| single_step(scaler.gains(&env.state().channel.gains));
    let mut history = HistoryWindow::zeros(n, k, cfg.history_window);
    let mut state = JointState {
        history: Arc::new(history.encode(c)),
        gains: gains_now(&env),
    };
    for step in 0..total {
        let eps = cfg.epsilon.value(step);
        let out = agent.joint_forward(&state)?;
        let action = select_action(&agent.space, eps, &mut rng, || Ok(out.q.clone()))?;
        let slot = env.step(&action)?;
        let reported: Vec<f64> = slot.true_batteries_selected.iter().map(|&b| b as f64).collect();
        let on_selected: Vec<f64> = action.selected().iter().map(|&i| out.batteries[i]).collect();
        let p_loss = prediction_loss(&reported, &on_selected)?;
        let reward = joint_reward(slot.sum_rate, p_loss, cfg.beta);
        let indicators: Vec<f64> = action.indicators(n).iter().map(|&x| x as f64).collect();
        history = history.update(&indicators, &out.batteries, &reported)?;
        let next = JointState {
            history: Arc::new(history.encode(c)),
            gains: gains_now(&env),
        };
        let terminal = (step + 1) % t_len == 0;
        replay.push(JointSample {
            transition: Transition {
                state,
                action,
                reward: reward * cfg.reward_scale,
                next_state: next.clone(),
                terminal,
            },
            reported,
        });
        let train_loss = if replay.len() >= cfg.warmup {
            let batch = replay.sample(cfg.batch_size, &mut rng)?;
            Some(agent.joint_update(&batch, step_cfg)?.0)
        } else {
            None
        };
        log.push(StepRecord {
            step,
            episode: step / t_len,
            reward,
            sum_rate: slot.sum_rate,
            p_loss: Some(p_loss),
            train_loss,
            epsilon: Some(eps),
        });
        state = if terminal {
            history = HistoryWindow::zeros(n, k, cfg.history_window);
            JointState {
                history: Arc::new(history.encode(c)),
                gains: next.gains,
            }
        } else {
            next
        };
    }
    Ok(agent)
}
