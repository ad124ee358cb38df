//! Learning agents: access control by DQN, battery prediction by TD(0), and
//! the joint two-layer controller, with their training loops.

pub mod action_space;
pub mod dqn;
pub mod exploration;
pub mod features;
pub mod gradcheck;
pub mod history;
pub mod joint;
pub mod predictor;
pub mod replay;
pub mod training;

pub use action_space::{action_decode, action_encode, binomial, ActionSpace, DEFAULT_ACTION_CAP};
pub use dqn::{dqn_target, AccessTransition, QLearner, Sequence, Transition};
pub use exploration::{epsilon_greedy_select, EpsilonSchedule};
pub use features::FeatureScaler;
pub use gradcheck::{run_gradchecks, CheckedNetwork, GradcheckRow, GradcheckSetup};
pub use history::HistoryWindow;
pub use joint::{joint_reward, JointAgent, JointSample, JointState, JointStep, JointTransition};
pub use predictor::{predict_batteries, td0_update, PredictionSample};
pub use replay::ReplayBuffer;
pub use training::{
    new_access_learner, new_joint_agent, rollout_access, train_access, train_access_in, train_joint, train_joint_in,
    train_predict, train_predict_in, AccessRun, JointRun, PredictRun, StepRecord, TrainConfig,
};
