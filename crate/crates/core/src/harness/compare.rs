//! Seeded comparison of several policies under common random numbers.

use std::fmt::Write as _;

use super::config::{Algorithm, ExperimentConfig};
use super::metrics::moving_average;
use super::run::{run_records, seed_trace};
use crate::baselines::{dp_oracle, oracle_cost, relaxation_bound, ORACLE_WORK_LIMIT};
use crate::error::{Error, Result};

/// Sample mean and standard error of the mean (`n - 1` denominator; zero
/// for a single value).
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRow {
    pub algorithm: Algorithm,
    /// Final smoothed reward, one entry per seed.
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
}

/// Offline benchmark over the final smoothing window of each seed, as an
/// average per slot, starting from full batteries.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub label: &'static str,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub seeds: Vec<u64>,
    pub window: usize,
    pub policies: Vec<PolicyRow>,
    pub bounds: Vec<BoundRow>,
}

impl Comparison {
    pub fn policy(&self, algorithm: Algorithm) -> Option<&PolicyRow> {
        self.policies.iter().find(|r| r.algorithm == algorithm)
    }

    pub fn bound(&self, label: &str) -> Option<&BoundRow> {
        self.bounds.iter().find(|r| r.label == label)
    }

    /// Plain-text table, one line per policy and bound.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<20} {:>12} {:>10}  per-seed", "policy", "mean", "std.err");
        let mut line = |name: &str, mean: f64, se: f64, per_seed: &[f64]| {
            let seeds: Vec<String> = per_seed.iter().map(|v| format!("{v:.3}")).collect();
            let _ = writeln!(out, "{name:<20} {mean:>12.4} {se:>10.4}  {}", seeds.join(" "));
        };
        for r in &self.policies {
            line(&r.algorithm.to_string(), r.mean, r.std_error, &r.per_seed);
        }
        for b in &self.bounds {
            line(b.label, b.mean, b.std_error, &b.per_seed);
        }
        out
    }
}

pub const RELAXATION_LABEL: &str = "relaxation-bound";
pub const ORACLE_LABEL: &str = "dp-oracle";

fn bound_row(label: &'static str, per_seed: Vec<f64>) -> BoundRow {
    let (mean, std_error) = mean_and_std_error(&per_seed);
    BoundRow {
        label,
        per_seed,
        mean,
        std_error,
    }
}

/// Runs every policy on every seed. Within a seed all policies see the same
/// energy and channel realization. Bounds cover the last
/// `smoothing_window` slots of `total_steps`; the exact oracle row is added
/// when that window fits its size limit.
pub fn compare_policies(cfg: &ExperimentConfig, policies: &[Algorithm], seeds: &[u64]) -> Result<Comparison> {
    if seeds.is_empty() {
        return Err(Error::Config("compare needs at least one seed".into()));
    }
    cfg.validate()?;
    let mut rows = Vec::with_capacity(policies.len());
    for &algorithm in policies {
        let per_seed = seeds
            .iter()
            .map(|&seed| {
                let run_cfg = ExperimentConfig {
                    algorithm,
                    seed,
                    ..cfg.clone()
                };
                let (records, result) = run_records(&run_cfg);
                result?;
                let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
                Ok(moving_average(&rewards, cfg.smoothing_window).last().copied().unwrap_or(0.0))
            })
            .collect::<Result<Vec<f64>>>()?;
        let (mean, std_error) = mean_and_std_error(&per_seed);
        rows.push(PolicyRow {
            algorithm,
            per_seed,
            mean,
            std_error,
        });
    }

    let scenario = &cfg.scenario;
    let horizon = cfg.train.total_steps as usize;
    let window = cfg.smoothing_window.min(horizon);
    let mut bounds = Vec::new();
    if window > 0 {
        let full = vec![scenario.battery_capacity; scenario.n_ues];
        let with_oracle = oracle_cost(scenario, window) <= ORACLE_WORK_LIMIT;
        let mut relaxed = Vec::new();
        let mut exact = Vec::new();
        for &seed in seeds {
            let trace = seed_trace(scenario, seed, horizon)?.window(horizon - window, window);
            relaxed.push(relaxation_bound(&trace, scenario, window, 1.0, &full)? / window as f64);
            if with_oracle {
                exact.push(dp_oracle(&trace, scenario, window, 1.0, &full)?.value / window as f64);
            }
        }
        bounds.push(bound_row(RELAXATION_LABEL, relaxed));
        if with_oracle {
            bounds.push(bound_row(ORACLE_LABEL, exact));
        }
    }
    Ok(Comparison {
        seeds: seeds.to_vec(),
        window,
        policies: rows,
        bounds,
    })
}
