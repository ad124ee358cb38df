//! Offline benchmarks against brute force, and scheduler contracts.

use eh_uplink::agents::action_decode;
use eh_uplink::agents::binomial;
use eh_uplink::baselines::{
    dp_oracle, myopic_select, relaxation_bound, schedule_value, Myopic, RandomScheduler, RoundRobin, Scheduler,
};
use eh_uplink::env::{AccessAction, Environment, ExogenousTrace, ScenarioConfig};
use eh_uplink::rng::stream_rng;
use proptest::prelude::*;
use rand::Rng;

fn scenario(n: usize, k: usize, capacity: u32, power: u32) -> ScenarioConfig {
    ScenarioConfig {
        n_ues: n,
        k_channels: k,
        battery_capacity: capacity,
        tx_power: power,
        fading_enabled: false,
        ue_speed_mps: 0.0,
        ..Default::default()
    }
}

/// Every schedule of `horizon` slots, simulated directly. Discounting is
/// folded backwards, the same association order as a backward recursion.
fn brute_force(trace: &ExogenousTrace, cfg: &ScenarioConfig, horizon: usize, gamma: f64, initial: &[u32]) -> f64 {
    let (n, k) = (cfg.n_ues, cfg.k_channels);
    let actions = binomial(n, k) as usize;
    let budget = cfg.link_budget();
    let mut best = f64::NEG_INFINITY;
    for code in 0..actions.pow(horizon as u32) {
        let mut rest = code;
        let mut b = initial.to_vec();
        let mut rewards = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let a = action_decode(rest % actions, n, k).unwrap();
            rest /= actions;
            let mut r = 0.0;
            for i in 0..n {
                let spend = a.contains(i) && b[i] >= cfg.tx_power;
                if spend {
                    r += budget.rate(trace.gains[t][i]);
                }
                b[i] = (b[i] + trace.arrivals[t][i] - if spend { cfg.tx_power } else { 0 }).min(cfg.battery_capacity);
            }
            rewards.push(r);
        }
        let v = rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc);
        best = best.max(v);
    }
    best
}

fn gains_db(db: &[f64]) -> Vec<f64> {
    db.iter().map(|d| 10f64.powf(d / 10.0)).collect()
}

#[test]
fn toy_fixture_matches_all_eight_schedules() {
    let cfg = scenario(2, 1, 2, 2);
    let trace = ExogenousTrace {
        gains: vec![
            gains_db(&[-95.0, -100.0]),
            gains_db(&[-104.0, -96.0]),
            gains_db(&[-98.0, -97.0]),
            gains_db(&[-98.0, -97.0]),
        ],
        arrivals: vec![vec![1, 2], vec![2, 0], vec![0, 1]],
    };
    for gamma in [1.0, 0.9, 0.5] {
        for initial in [[2, 1], [0, 0], [2, 2], [1, 2]] {
            let dp = dp_oracle(&trace, &cfg, 3, gamma, &initial).unwrap();
            assert_eq!(dp.value, brute_force(&trace, &cfg, 3, gamma, &initial), "{gamma} {initial:?}");
            assert_eq!(dp.schedule.len(), 3);
            assert_eq!(schedule_value(&trace, &cfg, &dp.schedule, gamma, &initial).unwrap(), dp.value);
        }
    }
}

fn random_trace<R: Rng>(n: usize, horizon: usize, max_arrival: u32, rng: &mut R) -> ExogenousTrace {
    ExogenousTrace {
        gains: (0..=horizon)
            .map(|_| (0..n).map(|_| 10f64.powf(rng.random_range(-11.0..-8.0))).collect())
            .collect(),
        arrivals: (0..horizon)
            .map(|_| (0..n).map(|_| rng.random_range(0..=max_arrival)).collect())
            .collect(),
    }
}

/// Closed-loop discounted return of a scheduler replayed on a trace.
fn replay(sched: &mut dyn Scheduler, trace: &ExogenousTrace, cfg: &ScenarioConfig, gamma: f64, initial: &[u32]) -> f64 {
    let mut env = Environment::with_batteries(cfg, Box::new(trace.replay()), initial.to_vec()).unwrap();
    let mut acts = Vec::new();
    for _ in 0..trace.horizon() {
        let a = sched.select(env.state());
        env.step(&a).unwrap();
        acts.push(a);
    }
    schedule_value(trace, cfg, &acts, gamma, initial).unwrap()
}

#[test]
fn bound_dominates_oracle_on_random_tiny_instances() {
    let mut rng = stream_rng(7, 9);
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let k = rng.random_range(1..=n);
        let c = rng.random_range(1..=4);
        let p = rng.random_range(1..=c);
        let horizon = rng.random_range(1..=6);
        let cfg = scenario(n, k, c, p);
        let trace = random_trace(n, horizon, 3, &mut rng);
        let initial: Vec<u32> = (0..n).map(|_| rng.random_range(0..=c)).collect();
        let gamma = rng.random_range(0.5..=1.0);
        let dp = dp_oracle(&trace, &cfg, horizon, gamma, &initial).unwrap().value;
        let bound = relaxation_bound(&trace, &cfg, horizon, gamma, &initial).unwrap();
        assert!(bound >= dp * (1.0 - 1e-12), "bound {bound} < dp {dp}");
        let policies: [Box<dyn Scheduler>; 3] = [
            Box::new(RoundRobin::new(n, k)),
            Box::new(RandomScheduler::new(n, k, stream_rng(1, 2))),
            Box::new(Myopic::new(&cfg)),
        ];
        for mut s in policies {
            assert!(dp >= replay(s.as_mut(), &trace, &cfg, gamma, &initial) * (1.0 - 1e-12));
        }
    }
}

#[test]
fn single_slot_oracle_is_myopic() {
    let mut rng = stream_rng(3, 9);
    for _ in 0..50 {
        let cfg = scenario(4, 2, 4, 2);
        let trace = random_trace(4, 1, 2, &mut rng);
        let b: Vec<u32> = (0..4).map(|_| rng.random_range(0..=4)).collect();
        let dp = dp_oracle(&trace, &cfg, 1, 0.9, &b).unwrap();
        let mp = myopic_select(&b, &trace.gains[0], 2, 2, &cfg.link_budget());
        assert_eq!(dp.value, schedule_value(&trace, &cfg, &[mp], 0.9, &b).unwrap());
    }
}

#[test]
fn starved_instance_is_worth_nothing() {
    let cfg = scenario(3, 2, 4, 2);
    let mut rng = stream_rng(4, 9);
    let mut trace = random_trace(3, 5, 0, &mut rng);
    trace.arrivals.iter_mut().for_each(|a| a.fill(0));
    assert_eq!(dp_oracle(&trace, &cfg, 5, 0.9, &[1, 0, 1]).unwrap().value, 0.0);
    assert_eq!(relaxation_bound(&trace, &cfg, 5, 0.9, &[1, 0, 1]).unwrap(), 0.0);
}

fn valid(a: &AccessAction, n: usize, k: usize) -> bool {
    let s = a.selected();
    s.len() == k && s.windows(2).all(|w| w[0] < w[1]) && s.iter().all(|&i| i < n)
}

proptest! {
    #[test]
    fn oracle_matches_brute_force(seed in 0u64..10_000, n in 1usize..4, horizon in 1usize..5) {
        let mut rng = stream_rng(seed, 9);
        let k = rng.random_range(1..=n);
        let c = rng.random_range(1..=3);
        let cfg = scenario(n, k, c, rng.random_range(1..=c));
        let trace = random_trace(n, horizon, 2, &mut rng);
        let initial: Vec<u32> = (0..n).map(|_| rng.random_range(0..=c)).collect();
        let dp = dp_oracle(&trace, &cfg, horizon, 0.8, &initial).unwrap().value;
        let bf = brute_force(&trace, &cfg, horizon, 0.8, &initial);
        prop_assert!((dp - bf).abs() <= 1e-12 * bf.abs().max(1.0), "{} vs {}", dp, bf);
    }

    #[test]
    fn schedulers_emit_valid_actions(seed in 0u64..10_000, n in 1usize..12) {
        let mut rng = stream_rng(seed, 9);
        let k = rng.random_range(1..=n);
        let cfg = ScenarioConfig { n_ues: n, k_channels: k, ..Default::default() };
        let mut env = Environment::new(&cfg, seed).unwrap();
        let mut scheds: Vec<Box<dyn Scheduler>> = vec![
            Box::new(RoundRobin::new(n, k)),
            Box::new(RandomScheduler::new(n, k, stream_rng(seed, 2))),
            Box::new(Myopic::new(&cfg)),
        ];
        for t in 0..20 {
            for s in scheds.iter_mut() {
                let a = s.select(env.state());
                prop_assert!(valid(&a, n, k), "{} {:?}", s.name(), a);
            }
            let a = scheds[t % 3].select(env.state());
            env.step(&a).unwrap();
        }
    }

    #[test]
    fn round_robin_ignores_gains_and_batteries(seed in 0u64..10_000, n in 2usize..10) {
        let k = 1 + seed as usize % n;
        let cfg = ScenarioConfig { n_ues: n, k_channels: k, ..Default::default() };
        let a = Environment::new(&cfg, seed).unwrap();
        let b = Environment::new(&cfg, seed + 1).unwrap();
        let (mut ra, mut rb) = (RoundRobin::new(n, k), RoundRobin::new(n, k));
        for _ in 0..3 * n {
            prop_assert_eq!(ra.select(a.state()), rb.select(b.state()));
        }
    }
}
