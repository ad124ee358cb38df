//! One seeded run of a learning algorithm or baseline.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::config::{Algorithm, BaselineKind, ExperimentConfig};
use super::metrics::{moving_average, write_metrics, MetricsRow};
use crate::agents::{train_access_in, train_joint_in, train_predict_in, StepRecord};
use crate::baselines::{dp_oracle, Myopic, RandomScheduler, RoundRobin, Scheduler};
use crate::env::{Environment, ExogenousTrace, GeneratedProcess, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_AGENT, STREAM_ENV};

/// `<algo>-<seed>.csv`.
pub fn metrics_file_name(algorithm: Algorithm, seed: u64) -> String {
    format!("{}-{seed}.csv", algorithm.name())
}

/// The exogenous realization every policy sees under `seed`.
pub fn seed_trace(scenario: &ScenarioConfig, seed: u64, horizon: usize) -> Result<ExogenousTrace> {
    GeneratedProcess::new(scenario, stream_rng(seed, STREAM_ENV))?.record(horizon)
}

/// Number of slots a run of `cfg` covers.
pub fn run_length(cfg: &ExperimentConfig) -> u64 {
    match cfg.algorithm {
        Algorithm::Joint => cfg.train.joint_steps(),
        _ => cfg.train.total_steps,
    }
}

fn record(step: u64, episode_length: u64, sum_rate: f64) -> StepRecord {
    StepRecord {
        step,
        episode: step / episode_length,
        reward: sum_rate,
        sum_rate,
        p_loss: None,
        train_loss: None,
        epsilon: None,
    }
}

fn rollout_baseline(cfg: &ExperimentConfig, kind: BaselineKind, log: &mut Vec<StepRecord>) -> Result<()> {
    let scenario = &cfg.scenario;
    let (n, k) = (scenario.n_ues, scenario.k_channels);
    let steps = cfg.train.total_steps;
    let t_len = cfg.train.episode_length;
    let mut scheduler: Box<dyn Scheduler> = match kind {
        BaselineKind::RoundRobin => Box::new(RoundRobin::new(n, k)),
        BaselineKind::Random => Box::new(RandomScheduler::new(n, k, stream_rng(cfg.seed, STREAM_AGENT))),
        BaselineKind::Myopic => Box::new(Myopic::new(scenario)),
        BaselineKind::Oracle => {
            let trace = seed_trace(scenario, cfg.seed, steps as usize)?;
            let initial = vec![scenario.initial_battery; n];
            let plan = dp_oracle(&trace, scenario, steps as usize, 1.0, &initial)?;
            let mut env = Environment::from_source(scenario, Box::new(trace.replay()))?;
            for (step, action) in (0..).zip(&plan.schedule) {
                let out = env.step(action)?;
                log.push(record(step, t_len, out.sum_rate));
            }
            return Ok(());
        }
    };
    let mut env = Environment::new(scenario, cfg.seed)?;
    for step in 0..steps {
        let action = scheduler.select(env.state());
        let out = env.step(&action)?;
        log.push(record(step, t_len, out.sum_rate));
    }
    Ok(())
}

/// Runs `cfg` and returns its per-step records. On error the records hold
/// the steps completed before the failure.
pub fn run_records(cfg: &ExperimentConfig) -> (Vec<StepRecord>, Result<()>) {
    let mut log = Vec::with_capacity(run_length(cfg) as usize);
    let result = (|| {
        cfg.validate()?;
        let env = || Environment::new(&cfg.scenario, cfg.seed);
        match cfg.algorithm {
            Algorithm::Access => train_access_in(env()?, &cfg.train, cfg.seed, &mut log).map(drop),
            Algorithm::Predict => train_predict_in(env()?, &cfg.train, cfg.seed, &mut log).map(drop),
            Algorithm::Joint => train_joint_in(env()?, &cfg.train, cfg.seed, &mut log).map(drop),
            Algorithm::Baseline(kind) => rollout_baseline(cfg, kind, &mut log),
        }
    })();
    (log, result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub steps: u64,
    /// Last value of the smoothed reward.
    pub final_reward: f64,
    /// Last value of the smoothed prediction loss, where logged.
    pub final_p_loss: Option<f64>,
    /// Mean training loss over the last smoothing window, where logged.
    pub final_train_loss: Option<f64>,
    pub metrics_path: PathBuf,
}

impl RunSummary {
    pub fn from_records(cfg: &ExperimentConfig, records: &[StepRecord], metrics_path: PathBuf) -> Self {
        let w = cfg.smoothing_window;
        let last_smoothed = |v: Vec<f64>| moving_average(&v, w).last().copied();
        let rewards = records.iter().map(|r| r.reward).collect();
        let p_loss: Option<Vec<f64>> = records.iter().map(|r| r.p_loss).collect();
        let tail = &records[records.len().saturating_sub(w)..];
        let train: Vec<f64> = tail.iter().filter_map(|r| r.train_loss).collect();
        Self {
            algorithm: cfg.algorithm,
            seed: cfg.seed,
            steps: records.len() as u64,
            final_reward: last_smoothed(rewards).unwrap_or(0.0),
            final_p_loss: p_loss.filter(|v| !v.is_empty()).and_then(last_smoothed),
            final_train_loss: (!train.is_empty()).then(|| train.iter().sum::<f64>() / train.len() as f64),
            metrics_path,
        }
    }
}

fn write_file(path: &Path, rows: &[MetricsRow], truncated: Option<&str>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    write_metrics(&mut out, rows, truncated)?;
    std::io::Write::flush(&mut out)?;
    Ok(())
}

/// Runs `cfg` and writes `<out_dir>/<algo>-<seed>.csv`. A failed run still
/// writes the steps it completed, followed by the truncation marker, and
/// then returns the error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let path = cfg.out_dir.join(metrics_file_name(cfg.algorithm, cfg.seed));
    let (records, result) = run_records(cfg);
    let rows = MetricsRow::from_records(&records, cfg.smoothing_window);
    match result {
        Ok(()) => {
            write_file(&path, &rows, None)?;
            Ok(RunSummary::from_records(cfg, &records, path))
        }
        Err(e) => {
            // Config errors are reported before anything runs.
            if !matches!(e, Error::Config(_) | Error::ConfigParse { .. }) {
                write_file(&path, &rows, Some(&e.to_string()))?;
            }
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::parse_metrics;

    fn small(algorithm: Algorithm, dir: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig {
            algorithm,
            out_dir: dir.to_path_buf(),
            ..Default::default()
        };
        c.scenario.n_ues = 4;
        c.scenario.k_channels = 2;
        c.train.total_steps = 40;
        c.train.lstm_units = 4;
        c.train.history_window = 3;
        c.train.episode_length = 10;
        c.smoothing_window = 5;
        c
    }

    #[test]
    fn every_algorithm_writes_one_row_per_step() {
        let dir = tempfile::tempdir().unwrap();
        for a in ["access", "predict", "joint", "rr", "random", "mp"] {
            let cfg = small(a.parse().unwrap(), dir.path());
            let s = run_experiment(&cfg).unwrap();
            let (rows, trunc) = parse_metrics(&fs::read_to_string(&s.metrics_path).unwrap()).unwrap();
            assert_eq!(rows.len(), 40, "{a}");
            assert!(trunc.is_none());
            assert!(rows.windows(2).all(|w| w[0].step < w[1].step));
            let raw: Vec<f64> = rows.iter().map(|r| r.reward).collect();
            let smooth: Vec<f64> = rows.iter().map(|r| r.reward_smooth).collect();
            assert_eq!(moving_average(&raw, 5), smooth);
            assert_eq!(s.final_reward, *smooth.last().unwrap());
            assert_eq!(s.metrics_path.file_name().unwrap().to_str().unwrap(), format!("{}-0.csv", cfg.algorithm.name()));
        }
    }

    #[test]
    fn oracle_rollout_on_tiny_instance_and_guard_elsewhere() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(Algorithm::Baseline(BaselineKind::Oracle), dir.path());
        cfg.scenario.n_ues = 2;
        cfg.scenario.k_channels = 1;
        cfg.scenario.battery_capacity = 3;
        cfg.train.total_steps = 12;
        let s = run_experiment(&cfg).unwrap();
        assert_eq!(s.steps, 12);
        cfg.scenario.n_ues = 10;
        cfg.scenario.battery_capacity = 5;
        cfg.train.total_steps = 100;
        let e = run_experiment(&cfg).unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }

    #[test]
    fn config_errors_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(Algorithm::Access, dir.path());
        cfg.train.learning_rate = -1.0;
        assert_eq!(run_experiment(&cfg).unwrap_err().exit_code(), 2);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn numerical_fault_leaves_truncated_log() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(Algorithm::Access, dir.path());
        cfg.train.learning_rate = 1e300;
        cfg.train.grad_clip = 0.0;
        let e = run_experiment(&cfg).unwrap_err();
        assert_eq!(e.exit_code(), 3, "{e}");
        let text = fs::read_to_string(dir.path().join("access-0.csv")).unwrap();
        let (rows, trunc) = parse_metrics(&text).unwrap();
        assert!(rows.len() < 40);
        assert!(trunc.unwrap().contains("non-finite"));
    }
}
