use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eh_uplink::agents::{run_gradchecks, GradcheckSetup};
use eh_uplink::baselines::{dp_oracle, relaxation_bound};
use eh_uplink::harness::{compare_policies, load_config, run_experiment, seed_trace, Algorithm, BaselineKind, ExperimentConfig};
use eh_uplink::{Error, Result};

#[derive(Parser)]
#[command(name = "eh-uplink", version, about = "Energy-harvesting uplink experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; unspecified keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for metric files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Total number of slots; overrides `total_steps` and `episodes`.
    #[arg(long, global = true)]
    steps: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the LSTM-DQN access controller.
    TrainAccess,
    /// Train the battery predictor under a random schedule.
    TrainPredict,
    /// Train the joint predictor and access controller.
    TrainJoint,
    /// Roll out a baseline scheduler: rr, random, mp or oracle.
    Baseline { name: BaselineKind },
    /// Compare policies over several seeds under common random numbers.
    Compare {
        #[arg(long, value_delimiter = ',', default_value = "access,mp,rr,random")]
        policies: Vec<Algorithm>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
    },
    /// Finite-difference gradient checks of all three training losses.
    Gradcheck {
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        /// Check the factorized action head instead of the enumerated one.
        #[arg(long)]
        factorized: bool,
    },
    /// Offline optimum over the first `--steps` slots of the seed's trace.
    Oracle {
        /// Report the min-cost-flow relaxation bound instead of the exact value.
        #[arg(long)]
        relaxation: bool,
    },
}

fn experiment(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(steps) = common.steps {
        cfg.train.total_steps = steps;
        cfg.train.episodes = 0;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn train(mut cfg: ExperimentConfig, algorithm: Algorithm) -> Result<bool> {
    cfg.algorithm = algorithm;
    let s = run_experiment(&cfg)?;
    println!("algorithm {}", s.algorithm);
    println!("seed {}", s.seed);
    println!("steps {}", s.steps);
    println!("final_reward {}", s.final_reward);
    if let Some(p) = s.final_p_loss {
        println!("final_p_loss {p}");
    }
    if let Some(l) = s.final_train_loss {
        println!("final_train_loss {l}");
    }
    println!("metrics {}", s.metrics_path.display());
    Ok(true)
}

fn oracle(cfg: &ExperimentConfig, relaxation: bool) -> Result<bool> {
    let scenario = &cfg.scenario;
    let horizon = cfg.train.total_steps as usize;
    let trace = seed_trace(scenario, cfg.seed, horizon)?;
    let initial = vec![scenario.initial_battery; scenario.n_ues];
    let gamma = 1.0;
    if relaxation {
        let bound = relaxation_bound(&trace, scenario, horizon, gamma, &initial)?;
        println!("relaxation_bound {bound}");
        println!("per_slot {}", bound / horizon as f64);
    } else {
        let sol = dp_oracle(&trace, scenario, horizon, gamma, &initial)?;
        println!("oracle_value {}", sol.value);
        println!("per_slot {}", sol.value / horizon as f64);
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = experiment(&cli.common)?;
    match cli.command {
        Command::TrainAccess => train(cfg, Algorithm::Access),
        Command::TrainPredict => train(cfg, Algorithm::Predict),
        Command::TrainJoint => train(cfg, Algorithm::Joint),
        Command::Baseline { name } => train(cfg, Algorithm::Baseline(name)),
        Command::Compare { policies, seeds } => {
            if policies.is_empty() {
                return Err(Error::Config("no policies given".into()));
            }
            let table = compare_policies(&cfg, &policies, &seeds)?;
            print!("{}", table.to_table());
            Ok(true)
        }
        Command::Gradcheck {
            seeds,
            epsilon,
            tolerance,
            factorized,
        } => {
            let setup = GradcheckSetup {
                epsilon,
                factorized,
                ..Default::default()
            };
            let rows = run_gradchecks(&setup, seeds)?;
            let mut ok = true;
            println!("{:<6} {:<10} {:>8} {:>14}", "seed", "network", "params", "max_rel_error");
            for r in &rows {
                let pass = r.report.max_rel_error < tolerance;
                ok &= pass;
                println!(
                    "{:<6} {:<10} {:>8} {:>14.3e} {}",
                    r.seed,
                    r.network.name(),
                    r.report.n_params,
                    r.report.max_rel_error,
                    if pass { "ok" } else { "FAIL" }
                );
            }
            Ok(ok)
        }
        Command::Oracle { relaxation } => oracle(&cfg, relaxation),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
