//! Comparison schedulers and offline benchmarks.

mod mcmf;
pub mod oracle;
pub mod policies;

pub use oracle::{dp_oracle, oracle_cost, relaxation_bound, schedule_value, OracleSolution, ORACLE_WORK_LIMIT};
pub use policies::{
    myopic_select, random_select, round_robin_select, Myopic, RandomScheduler, RoundRobin, RoundRobinState,
    Scheduler,
};
