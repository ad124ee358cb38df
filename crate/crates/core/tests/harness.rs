//! Experiment harness against independent oracles.

use eh_uplink::agents::StepRecord;
use eh_uplink::baselines::{Myopic, RoundRobin, Scheduler};
use eh_uplink::env::{ArrivalModel, Environment, ScenarioConfig};
use eh_uplink::harness::{
    compare_policies, moving_average, run_records, seed_trace, Algorithm, BaselineKind, ExperimentConfig,
    RELAXATION_LABEL,
};
use proptest::prelude::*;

/// Fixed gains and deterministic harvesting of exactly `P` per slot starting
/// from full batteries: every scheduled UE always transmits.
fn always_feasible() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.scenario = ScenarioConfig {
        n_ues: 6,
        k_channels: 2,
        battery_capacity: 4,
        tx_power: 2,
        energy_rate_min: 2.0,
        energy_rate_max: 2.0,
        arrivals: ArrivalModel::Deterministic,
        fading_enabled: false,
        ue_speed_mps: 0.0,
        fixed_gains_db: Some(vec![-90.0, -95.0, -100.0, -105.0, -110.0, -115.0]),
        initial_battery: 4,
        ..Default::default()
    };
    c.train.total_steps = 400;
    c.algorithm = Algorithm::Baseline(BaselineKind::Random);
    c
}

fn rewards(records: &[StepRecord]) -> Vec<f64> {
    records.iter().map(|r| r.reward).collect()
}

#[test]
fn random_baseline_matches_its_analytic_mean() {
    let cfg = always_feasible();
    let s = &cfg.scenario;
    let budget = s.link_budget();
    let rates: Vec<f64> = s
        .fixed_gains_db
        .as_ref()
        .unwrap()
        .iter()
        .map(|db| budget.rate(10f64.powf(db / 10.0)))
        .collect();
    let (n, k) = (s.n_ues as f64, s.k_channels as f64);
    let mean_rate = rates.iter().sum::<f64>() / n;
    let pop_var = rates.iter().map(|r| (r - mean_rate).powi(2)).sum::<f64>() / n;
    // sum of k draws without replacement
    let slot_mean = k * mean_rate;
    let slot_var = k * pop_var * (n - k) / (n - 1.0);
    let window = cfg.smoothing_window as f64;
    let seeds = 10;
    let finals: Vec<f64> = (0..seeds)
        .map(|seed| {
            let (records, result) = run_records(&ExperimentConfig { seed, ..cfg.clone() });
            result.unwrap();
            *moving_average(&rewards(&records), cfg.smoothing_window).last().unwrap()
        })
        .collect();
    let avg = finals.iter().sum::<f64>() / seeds as f64;
    let sigma = (slot_var / window / seeds as f64).sqrt();
    assert!((avg - slot_mean).abs() <= 3.0 * sigma, "{avg} vs {slot_mean} +- {sigma}");
}

#[test]
fn every_policy_sees_the_seed_trace() {
    let mut cfg = always_feasible();
    cfg.scenario.arrivals = ArrivalModel::Poisson;
    cfg.scenario.energy_rate_min = 0.3;
    cfg.scenario.energy_rate_max = 1.5;
    cfg.scenario.fading_enabled = true;
    cfg.scenario.initial_battery = 0;
    let horizon = cfg.train.total_steps as usize;
    for seed in 0..3 {
        let trace = seed_trace(&cfg.scenario, seed, horizon).unwrap();
        let schedulers: [(BaselineKind, Box<dyn Scheduler>); 2] = [
            (BaselineKind::RoundRobin, Box::new(RoundRobin::new(6, 2))),
            (BaselineKind::Myopic, Box::new(Myopic::new(&cfg.scenario))),
        ];
        for (kind, mut sched) in schedulers {
            let mut env = Environment::from_source(&cfg.scenario, Box::new(trace.replay())).unwrap();
            let replayed: Vec<f64> = (0..horizon)
                .map(|_| {
                    let a = sched.select(env.state());
                    env.step(&a).unwrap().sum_rate
                })
                .collect();
            let run_cfg = ExperimentConfig {
                seed,
                algorithm: Algorithm::Baseline(kind),
                ..cfg.clone()
            };
            let (records, result) = run_records(&run_cfg);
            result.unwrap();
            assert_eq!(rewards(&records), replayed, "{kind:?} seed {seed}");
        }
    }
}

#[test]
fn policies_stay_below_the_relaxation_bound() {
    let mut cfg = always_feasible();
    cfg.scenario.arrivals = ArrivalModel::Poisson;
    cfg.scenario.fading_enabled = true;
    let t = compare_policies(
        &cfg,
        &[
            Algorithm::Baseline(BaselineKind::RoundRobin),
            Algorithm::Baseline(BaselineKind::Myopic),
        ],
        &[0, 1, 2],
    )
    .unwrap();
    let bound = t.bound(RELAXATION_LABEL).unwrap();
    for p in &t.policies {
        for (v, b) in p.per_seed.iter().zip(&bound.per_seed) {
            assert!(v <= b, "{} {v} > bound {b}", p.algorithm);
        }
    }
}

#[test]
fn smoothed_column_is_recomputable() {
    let mut cfg = always_feasible();
    cfg.scenario.arrivals = ArrivalModel::Poisson;
    cfg.smoothing_window = 37;
    let dir = tempfile::tempdir().unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    let summary = eh_uplink::harness::run_experiment(&cfg).unwrap();
    let text = std::fs::read_to_string(summary.metrics_path).unwrap();
    let (rows, _) = eh_uplink::harness::parse_metrics(&text).unwrap();
    let raw: Vec<f64> = rows.iter().map(|r| r.reward).collect();
    let smooth: Vec<f64> = rows.iter().map(|r| r.reward_smooth).collect();
    assert_eq!(moving_average(&raw, 37), smooth);
}

proptest! {
    #[test]
    fn moving_average_properties(
        series in proptest::collection::vec(-1e3f64..1e3, 0..300),
        window in 1usize..50,
        constant in -10.0f64..10.0,
    ) {
        let m = moving_average(&series, window);
        prop_assert_eq!(m.len(), series.len());
        for (i, v) in m.iter().enumerate() {
            let lo = (i + 1).saturating_sub(window);
            let slice = &series[lo..=i];
            let min = slice.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(*v >= min - 1e-9 && *v <= max + 1e-9);
        }
        prop_assert_eq!(moving_average(&series, 1), series.clone());
        let flat = vec![constant; series.len()];
        prop_assert!(moving_average(&flat, window).iter().all(|v| (v - constant).abs() <= 1e-12 * constant.abs().max(1.0)));
    }

    #[test]
    fn config_text_roundtrip(seed in 0u64..u64::MAX, n in 1usize..40, lr in 1e-6f64..1.0, fact in any::<bool>()) {
        let mut c = ExperimentConfig::default();
        c.seed = seed;
        c.scenario.n_ues = n;
        c.scenario.k_channels = 1 + (seed as usize) % n;
        c.train.learning_rate = lr;
        c.train.factorized_actions = fact;
        let back = ExperimentConfig::parse(&c.to_text(), std::path::Path::new("t")).unwrap();
        prop_assert_eq!(back, c);
    }
}
