use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vmsflow::config::RunConfig;
use vmsflow::output::{self, history_row, read_checkpoint, HISTORY_COLUMNS};
use vmsflow::simulation::Simulation;
use vmsflow::verification::{run_suite, SUITES};
use vmsflow::Error;

#[derive(Parser)]
#[command(name = "vmsflow", version, about = "Stabilized spline solver for periodic incompressible flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and stream its energy history to CSV.
    Run {
        /// Configuration file (`key = value` lines).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a configuration key; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Write a checkpoint every N steps.
        #[arg(long, value_name = "N")]
        checkpoint_every: Option<usize>,
        /// Use reproducible (fixed-order) reductions.
        #[arg(long)]
        deterministic_reductions: bool,
        /// Continue from a checkpoint instead of the initial condition.
        #[arg(long, value_name = "CHECKPOINT")]
        restart: Option<PathBuf>,
    },
    /// Run a verification suite and report pass/fail per check.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
    },
    /// Recompute the energy budget of a checkpointed state.
    BudgetReplay { checkpoint: PathBuf },
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_config_error() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn load_config(
    config: Option<PathBuf>,
    restart: &Option<PathBuf>,
) -> Result<(RunConfig, Option<output::Checkpoint>), Error> {
    if let Some(path) = restart {
        let ck = read_checkpoint(path)?;
        return Ok((ck.config.clone(), Some(ck)));
    }
    let path = config.ok_or_else(|| Error::ConfigValue {
        key: "--config".into(),
        message: "a configuration file is required unless --restart is given".into(),
    })?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::ConfigValue {
        key: "--config".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    Ok((RunConfig::parse(&text)?, None))
}

fn run(
    config: Option<PathBuf>,
    set: Vec<String>,
    output_dir: Option<PathBuf>,
    checkpoint_every: Option<usize>,
    deterministic: bool,
    restart: Option<PathBuf>,
) -> Result<(), Error> {
    let (mut cfg, checkpoint) = load_config(config, &restart)?;
    for s in &set {
        cfg.set(s)?;
    }
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    if let Some(n) = checkpoint_every {
        cfg.checkpoint_every = n;
    }
    cfg.deterministic_reductions |= deterministic;
    let resumed = checkpoint.is_some();
    let mut sim = match checkpoint {
        Some(ck) => Simulation::resume(&cfg, ck.state, ck.small)?,
        None => Simulation::new(&cfg)?,
    };
    let summary = output::run(&mut sim, resumed)?;
    println!(
        "completed {} steps, t = {:.6}, E = {:.10e}, history {}",
        summary.steps,
        summary.final_time,
        summary.final_energy,
        summary.history.display()
    );
    if let Some(ck) = summary.last_checkpoint {
        println!("last checkpoint {}", ck.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            set,
            output_dir,
            checkpoint_every,
            deterministic_reductions,
            restart,
        } => match run(config, set, output_dir, checkpoint_every, deterministic_reductions, restart) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => exit_for(&e),
        },
        Command::Verify { suite } => match run_suite(&suite) {
            Ok(reports) => {
                let mut ok = true;
                for r in &reports {
                    print!("{r}");
                    ok &= r.passed();
                }
                if ok {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => exit_for(&e),
        },
        Command::BudgetReplay { checkpoint } => match output::replay_budget(&checkpoint) {
            Ok((budget, cons)) => {
                println!("{}", HISTORY_COLUMNS.join(","));
                let step = read_checkpoint(&checkpoint).map(|c| c.state.step).unwrap_or(0);
                println!("{}", history_row(step, &budget, &cons, None).join(","));
                ExitCode::SUCCESS
            }
            Err(e) => exit_for(&e),
        },
    }
}
