use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use rested_bandits::config::parse_config;
use rested_bandits::engine::{run_experiment, ExecMode};
use rested_bandits::panel::{run_panel, Panel, PanelOptions};
use rested_bandits::report::export_csv;
use rested_bandits::verify::{run_suite, Suite};

/// Environment variable that caps the worker threads used for trials.
const THREADS_VAR: &str = "RESTED_BANDITS_THREADS";

#[derive(Parser)]
#[command(version, about = "Simulate non-stationary rested bandits")]
struct Cli {
    /// Run trials one after another on the calling thread.
    #[arg(long, global = true)]
    serial: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a benchmark panel (or `all`) with WeightedUCB and EXP3.
    Panel {
        name: String,
        dir: PathBuf,
        #[arg(long, default_value_t = 150)]
        arms: usize,
        #[arg(long, default_value_t = 5000)]
        horizon: u64,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a statistical self-check: concentration, log-growth,
    /// discrepancy-zero or all.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    /// A verification suite ran and failed.
    Test,
    /// Bad input or an I/O problem.
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| Failure::Usage(format!("{THREADS_VAR}={value:?} is not a thread count")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let mode = if cli.serial {
        ExecMode::Serial
    } else {
        ExecMode::Parallel
    };
    match cli.command {
        Command::Run { config, output } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
            let cfg = parse_config(&text)
                .map_err(|e| Failure::Usage(format!("{}:\n{e}", config.display())))?;
            let dir = output
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            info!(
                "running {} on {} (K={}, T={}, trials={})",
                cfg.policy.name(),
                cfg.env.family.name(),
                cfg.env.arms,
                cfg.env.horizon,
                cfg.trials
            );
            let experiment = run_experiment(&cfg.experiment(), mode)?;
            let (rounds, summary) = export_csv(&experiment, &dir, cfg.env.family.name())?;
            let last = experiment.aggregate.mean_avg_reward.len() - 1;
            println!(
                "{} on {}: reward/round {:.6} ± {:.6}, dreg {:.3}",
                cfg.policy.name(),
                cfg.env.family.name(),
                experiment.aggregate.mean_avg_reward[last],
                experiment.aggregate.std_avg_reward[last],
                experiment.aggregate.mean_delta_reg[last]
            );
            println!("wrote {} and {}", rounds.display(), summary.display());
        }
        Command::Panel {
            name,
            dir,
            arms,
            horizon,
            trials,
            seed,
        } => {
            let opts = PanelOptions {
                arms,
                horizon,
                trials,
                root_seed: seed,
                mode,
            };
            for panel in Panel::parse_selection(&name)? {
                for run in run_panel(panel, &opts)? {
                    let agg = &run.experiment.aggregate;
                    let last = agg.mean_avg_reward.len() - 1;
                    let (rounds, _) =
                        export_csv(&run.experiment, &dir.join(run.policy), panel.name())?;
                    println!(
                        "{panel:<16} {:<13} reward/round at t={horizon}: {:.6} ± {:.6}  -> {}",
                        run.policy,
                        agg.mean_avg_reward[last],
                        agg.std_avg_reward[last],
                        rounds.display()
                    );
                }
            }
        }
        Command::Verify { suite, seed } => {
            let suites = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse::<Suite>()?]
            };
            let mut passed = true;
            for s in suites {
                let report = run_suite(s, seed, mode)?;
                println!("[{s}]");
                for line in &report.lines {
                    println!("  {line}");
                }
                passed &= report.passed;
            }
            if !passed {
                return Err(Failure::Test);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Test) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
