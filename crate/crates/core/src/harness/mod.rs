//! Experiment orchestration: configuration files, metric logs, single runs
//! and seeded policy comparisons.

pub mod compare;
pub mod config;
pub mod metrics;
pub mod run;

pub use compare::{compare_policies, mean_and_std_error, BoundRow, Comparison, PolicyRow, ORACLE_LABEL, RELAXATION_LABEL};
pub use config::{load_config, Algorithm, BaselineKind, ExperimentConfig, CONFIG_KEYS};
pub use metrics::{moving_average, parse_metrics, write_metrics, MetricsRow, TRUNCATION_MARKER, METRICS_HEADER};
pub use run::{metrics_file_name, run_experiment, run_length, run_records, seed_trace, RunSummary};
