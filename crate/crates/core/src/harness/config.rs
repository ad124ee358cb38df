//! Flat `key = value` experiment configuration.
//!
//! One key per field; `#` starts a comment; booleans are `true`/`false`;
//! lists are comma-joined. The arrival cycle is a list of rows separated by
//! `;`. Unknown and repeated keys are errors.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agents::TrainConfig;
use crate::env::{ArrivalModel, ScenarioConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    RoundRobin,
    Random,
    Myopic,
    Oracle,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::RoundRobin,
        BaselineKind::Random,
        BaselineKind::Myopic,
        BaselineKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::RoundRobin => "rr",
            BaselineKind::Random => "random",
            BaselineKind::Myopic => "mp",
            BaselineKind::Oracle => "oracle",
        }
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown baseline `{s}` (expected rr, random, mp or oracle)")))
    }
}

/// What a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Access,
    Predict,
    Joint,
    Baseline(BaselineKind),
}

impl Algorithm {
    /// Short name used in metric file names and tables.
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Access => "access",
            Algorithm::Predict => "predict",
            Algorithm::Joint => "joint",
            Algorithm::Baseline(b) => b.name(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Baseline(b) => write!(f, "baseline:{}", b.name()),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    /// Accepts `access`, `predict`, `joint`, `baseline:<name>` and the bare
    /// baseline names.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "access" => Ok(Algorithm::Access),
            "predict" => Ok(Algorithm::Predict),
            "joint" => Ok(Algorithm::Joint),
            other => other
                .strip_prefix("baseline:")
                .unwrap_or(other)
                .parse()
                .map(Algorithm::Baseline)
                .map_err(|_| Error::Config(format!("unknown algorithm `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub train: TrainConfig,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Moving-average window of the smoothed columns.
    pub smoothing_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            train: TrainConfig::default(),
            algorithm: Algorithm::Access,
            seed: 0,
            out_dir: PathBuf::from("runs"),
            smoothing_window: 200,
        }
    }
}

/// Every recognized key, in file order.
pub const CONFIG_KEYS: &[&str] = &[
    "algorithm",
    "seed",
    "out_dir",
    "smoothing_window",
    "n_ues",
    "k_channels",
    "battery_capacity",
    "tx_power",
    "unit_power_dbm",
    "bandwidth_hz",
    "noise_dbm_per_hz",
    "cell_size_m",
    "ue_speed_mps",
    "energy_rate_min",
    "energy_rate_max",
    "energy_rates",
    "arrivals",
    "arrival_cycle",
    "fading",
    "fixed_gains_db",
    "rate_unit_divisor",
    "initial_battery",
    "gamma",
    "gamma_pred",
    "learning_rate",
    "batch_size",
    "replay_capacity",
    "warmup",
    "lstm_units",
    "history_window",
    "beta",
    "epsilon_start",
    "epsilon_end",
    "epsilon_decay_steps",
    "sync_period",
    "episode_length",
    "episodes",
    "total_steps",
    "grad_clip",
    "action_cap",
    "factorized_actions",
    "gain_db_min",
    "gain_db_max",
    "reward_scale",
    "joint_prediction_weight",
];

fn parse<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',').map(|x| parse(x.trim())).collect()
}

fn optional_list<T: FromStr>(v: &str) -> std::result::Result<Option<Vec<T>>, String> {
    if v.is_empty() {
        Ok(None)
    } else {
        parse_list(v).map(Some)
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let s = &mut self.scenario;
        let t = &mut self.train;
        match key {
            "algorithm" => self.algorithm = v.parse().map_err(|e: Error| e.to_string())?,
            "seed" => self.seed = parse(v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "smoothing_window" => self.smoothing_window = parse(v)?,
            "n_ues" => s.n_ues = parse(v)?,
            "k_channels" => s.k_channels = parse(v)?,
            "battery_capacity" => s.battery_capacity = parse(v)?,
            "tx_power" => s.tx_power = parse(v)?,
            "unit_power_dbm" => s.unit_power_dbm = parse(v)?,
            "bandwidth_hz" => s.bandwidth_hz = parse(v)?,
            "noise_dbm_per_hz" => s.noise_dbm_per_hz = parse(v)?,
            "cell_size_m" => s.cell_size_m = parse(v)?,
            "ue_speed_mps" => s.ue_speed_mps = parse(v)?,
            "energy_rate_min" => s.energy_rate_min = parse(v)?,
            "energy_rate_max" => s.energy_rate_max = parse(v)?,
            "energy_rates" => s.energy_rates = optional_list(v)?,
            "fading" => s.fading_enabled = parse_bool(v)?,
            "fixed_gains_db" => s.fixed_gains_db = optional_list(v)?,
            "rate_unit_divisor" => s.rate_unit_divisor = parse(v)?,
            "initial_battery" => s.initial_battery = parse(v)?,
            "gamma" => t.gamma = parse(v)?,
            "gamma_pred" => t.gamma_pred = parse(v)?,
            "learning_rate" => t.learning_rate = parse(v)?,
            "batch_size" => t.batch_size = parse(v)?,
            "replay_capacity" => t.replay_capacity = parse(v)?,
            "warmup" => t.warmup = parse(v)?,
            "lstm_units" => t.lstm_units = parse(v)?,
            "history_window" => t.history_window = parse(v)?,
            "beta" => t.beta = parse(v)?,
            "epsilon_start" => t.epsilon.start = parse(v)?,
            "epsilon_end" => t.epsilon.end = parse(v)?,
            "epsilon_decay_steps" => t.epsilon.decay_steps = parse(v)?,
            "sync_period" => t.sync_period = parse(v)?,
            "episode_length" => t.episode_length = parse(v)?,
            "episodes" => t.episodes = parse(v)?,
            "total_steps" => t.total_steps = parse(v)?,
            "grad_clip" => t.grad_clip = parse(v)?,
            "action_cap" => t.action_cap = parse(v)?,
            "factorized_actions" => t.factorized_actions = parse_bool(v)?,
            "gain_db_min" => t.gain_db_min = parse(v)?,
            "gain_db_max" => t.gain_db_max = parse(v)?,
            "reward_scale" => t.reward_scale = parse(v)?,
            "joint_prediction_weight" => t.joint_prediction_weight = parse(v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

fn parse_arrivals(model: &str, cycle: Option<&str>) -> std::result::Result<ArrivalModel, String> {
    match (model, cycle) {
        ("poisson", None) => Ok(ArrivalModel::Poisson),
        ("deterministic", None) => Ok(ArrivalModel::Deterministic),
        ("cyclic", Some(c)) if !c.is_empty() => c
            .split(';')
            .map(|row| parse_list(row.trim()))
            .collect::<std::result::Result<_, _>>()
            .map(ArrivalModel::Cyclic),
        ("cyclic", _) => Err("arrivals = cyclic needs a non-empty arrival_cycle".into()),
        ("poisson" | "deterministic", Some(_)) => Err("arrival_cycle is only valid with arrivals = cyclic".into()),
        (other, _) => Err(format!("expected poisson, deterministic or cyclic, got `{other}`")),
    }
}

impl ExperimentConfig {
    /// Parses a config document; `origin` is only used in error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::ConfigParse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut cfg = Self::default();
        let mut seen: Vec<&str> = Vec::new();
        let mut arrivals: Option<(usize, String)> = None;
        let mut cycle: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let known = CONFIG_KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| err(line_no, format!("unknown key `{key}`")))?;
            if seen.contains(known) {
                return Err(err(line_no, format!("key `{key}` given twice")));
            }
            seen.push(known);
            match key {
                "arrivals" => arrivals = Some((line_no, value.to_string())),
                "arrival_cycle" => cycle = Some(value.to_string()),
                _ => cfg.set(key, value).map_err(|m| err(line_no, format!("{key}: {m}")))?,
            }
        }
        let (line_no, model) = arrivals.unwrap_or((0, "poisson".into()));
        cfg.scenario.arrivals = parse_arrivals(&model, cycle.as_deref()).map_err(|m| err(line_no, m))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.train.validate()?;
        if self.smoothing_window == 0 {
            return Err(Error::Config("smoothing_window must be at least 1".into()));
        }
        Ok(())
    }

    /// The config as a document that [`ExperimentConfig::parse`] reads back
    /// to an equal value.
    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let t = &self.train;
        let (arrivals, cycle) = match &s.arrivals {
            ArrivalModel::Cyclic(rows) => ("cyclic", Some(rows.iter().map(|r| join(r)).collect::<Vec<_>>().join(";"))),
            other => (other.name(), None),
        };
        let opt = |v: &Option<Vec<f64>>| v.as_deref().map(join).unwrap_or_default();
        let mut pairs: Vec<(&str, String)> = vec![
            ("algorithm", self.algorithm.to_string()),
            ("seed", self.seed.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("smoothing_window", self.smoothing_window.to_string()),
            ("n_ues", s.n_ues.to_string()),
            ("k_channels", s.k_channels.to_string()),
            ("battery_capacity", s.battery_capacity.to_string()),
            ("tx_power", s.tx_power.to_string()),
            ("unit_power_dbm", s.unit_power_dbm.to_string()),
            ("bandwidth_hz", s.bandwidth_hz.to_string()),
            ("noise_dbm_per_hz", s.noise_dbm_per_hz.to_string()),
            ("cell_size_m", s.cell_size_m.to_string()),
            ("ue_speed_mps", s.ue_speed_mps.to_string()),
            ("energy_rate_min", s.energy_rate_min.to_string()),
            ("energy_rate_max", s.energy_rate_max.to_string()),
            ("energy_rates", opt(&s.energy_rates)),
            ("arrivals", arrivals.to_string()),
        ];
        if let Some(c) = cycle {
            pairs.push(("arrival_cycle", c));
        }
        pairs.extend([
            ("fading", s.fading_enabled.to_string()),
            ("fixed_gains_db", opt(&s.fixed_gains_db)),
            ("rate_unit_divisor", s.rate_unit_divisor.to_string()),
            ("initial_battery", s.initial_battery.to_string()),
            ("gamma", t.gamma.to_string()),
            ("gamma_pred", t.gamma_pred.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("replay_capacity", t.replay_capacity.to_string()),
            ("warmup", t.warmup.to_string()),
            ("lstm_units", t.lstm_units.to_string()),
            ("history_window", t.history_window.to_string()),
            ("beta", t.beta.to_string()),
            ("epsilon_start", t.epsilon.start.to_string()),
            ("epsilon_end", t.epsilon.end.to_string()),
            ("epsilon_decay_steps", t.epsilon.decay_steps.to_string()),
            ("sync_period", t.sync_period.to_string()),
            ("episode_length", t.episode_length.to_string()),
            ("episodes", t.episodes.to_string()),
            ("total_steps", t.total_steps.to_string()),
            ("grad_clip", t.grad_clip.to_string()),
            ("action_cap", t.action_cap.to_string()),
            ("factorized_actions", t.factorized_actions.to_string()),
            ("gain_db_min", t.gain_db_min.to_string()),
            ("gain_db_max", t.gain_db_max.to_string()),
            ("reward_scale", t.reward_scale.to_string()),
            ("joint_prediction_weight", t.joint_prediction_weight.to_string()),
        ]);
        pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::parse(&text, path)
}
