//! Batch driver for training, evaluating, and stress-testing the
//! demand-response agent. Every subcommand reads one TOML configuration and
//! writes plain files; nothing here keeps state between invocations.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use precool_core::harness::{
    self, persist_outcome, robustness, run_one, sweep, transfer, Comparison,
};
use precool_core::{Error, RunConfig};

#[derive(Parser)]
#[command(name = "precool", version, about = "Demand-response training harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to the run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the run seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the observation set (1, 2, or 3).
    #[arg(long)]
    set: Option<u8>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(set) = self.set {
            cfg.run.state_space_set = set;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent, evaluate it against the baseline, and report.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Persist the run (config, CSVs, checkpoint) under this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a saved checkpoint against the baseline controller.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Checkpoint produced by a previous training run.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Persist evaluation CSVs and the comparison under this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the gamma/alpha/lambda hyperparameter sweep.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Persist per-cell runs and the summary under this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent cells.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run the training-budget robustness grid.
    Robustness {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Persist per-cell runs and the grid under this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent cells.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate a checkpoint under a different configuration's traces.
    Transfer {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Checkpoint produced by a previous training run.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Persist evaluation CSVs and the comparison under this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the configuration's trace set (loaded or synthesized) to CSV.
    GenTraces {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Destination CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Trace { .. } => 3,
                _ => 4,
            })
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train { cfg, out } => {
            let cfg = cfg.load()?;
            let traces = harness::load_or_synthesize(&cfg)?;
            let started = Instant::now();
            let outcome = run_one(&cfg, traces.clone(), cfg.run.seed)?;
            println!(
                "trained seed {} for {} episodes in {:.1}s ({} gradient updates)",
                outcome.seed,
                outcome.train.episodes.len(),
                started.elapsed().as_secs_f64(),
                outcome.train.losses.len()
            );
            for row in &outcome.train.episodes {
                println!(
                    "  episode {:>3}  reward {:>10.2}  cost {:>8.2}  discomfort {:>7.3} degC.h",
                    row.episode, row.reward_total, row.cost, row.discomfort_dh
                );
            }
            print_comparison(&outcome.comparison);
            if let Some(root) = out {
                let dir = persist_outcome(&root, "train", "default", &cfg, &traces, &outcome)?;
                println!("run written to {}", dir.path().display());
            }
            Ok(())
        }
        Command::Evaluate {
            cfg,
            checkpoint,
            out,
        }
        | Command::Transfer {
            cfg,
            checkpoint,
            out,
        } => {
            let cfg = cfg.load()?;
            let traces = harness::load_or_synthesize(&cfg)?;
            let cmp = transfer(&checkpoint, &cfg, traces, out.as_deref())?;
            print_comparison(&cmp);
            if let Some(root) = out {
                println!("evaluation written to {}", root.join("transfer").display());
            }
            Ok(())
        }
        Command::Sweep { cfg, out, jobs } => {
            let cfg = cfg.load()?;
            let traces = harness::load_or_synthesize(&cfg)?;
            let rows = sweep(&cfg, traces, out.as_deref(), jobs)?;
            println!(
                "{:<24} {:>4} {:>10} {:>10} {:>8} {:>9} {:>9}",
                "cell", "seed", "drl_cost", "rbc_cost", "cost%", "drl_dh", "rbc_dh"
            );
            for r in &rows {
                println!(
                    "{:<24} {:>4} {:>10.2} {:>10.2} {:>8} {:>9.3} {:>9.3}",
                    r.cell,
                    r.seed,
                    r.drl_cost,
                    r.rbc_cost,
                    fmt_pct(r.pct_cost),
                    r.drl_discomfort_dh,
                    r.rbc_discomfort_dh
                );
            }
            if let Some(root) = out {
                println!("summary written to {}", root.join("sweep").display());
            }
            Ok(())
        }
        Command::Robustness { cfg, out, jobs } => {
            let cfg = cfg.load()?;
            let traces = harness::load_or_synthesize(&cfg)?;
            let rows = robustness(&cfg, traces, out.as_deref(), jobs)?;
            println!(
                "{:>8} {:>8} {:>10} {:>8} {:>9} {:>10} {:>9}",
                "episodes", "interval", "drl_cost", "cost%", "drl_dh", "train_dh", "excluded"
            );
            for r in &rows {
                println!(
                    "{:>8} {:>8} {:>10.2} {:>8} {:>9.3} {:>10.3} {:>9}",
                    r.episodes,
                    r.update_interval_steps,
                    r.drl_cost,
                    fmt_pct(r.pct_cost),
                    r.drl_discomfort_dh,
                    r.train_discomfort_dh,
                    r.excluded
                );
            }
            if let Some(root) = out {
                println!("grid written to {}", root.join("robustness").display());
            }
            Ok(())
        }
        Command::GenTraces { cfg, out } => {
            let cfg = cfg.load()?;
            let traces = harness::load_or_synthesize(&cfg)?;
            traces.save(&out)?;
            println!(
                "wrote {} rows at {} min resolution to {} (sha256 {})",
                traces.len(),
                traces.step_minutes(),
                out.display(),
                traces.content_hash()
            );
            Ok(())
        }
    }
}

fn fmt_pct(v: Option<f64>) -> String {
    match v {
        Some(p) => format!("{p:+.2}%"),
        None => "n/a".to_string(),
    }
}

fn print_comparison(cmp: &Comparison) {
    println!(
        "agent:    cost {:>10.2}  energy {:>10.1} kWh  discomfort {:>8.3} degC.h",
        cmp.drl.cost, cmp.drl.energy_kwh, cmp.drl.discomfort_dh
    );
    println!(
        "baseline: cost {:>10.2}  energy {:>10.1} kWh  discomfort {:>8.3} degC.h",
        cmp.rbc.cost, cmp.rbc.energy_kwh, cmp.rbc.discomfort_dh
    );
    println!(
        "change:   cost {}  discomfort {}",
        fmt_pct(cmp.pct_cost),
        fmt_pct(cmp.pct_discomfort)
    );
    if let Some(b) = &cmp.blocks {
        println!(
            "blocks:   cheap {:02}:00 mean {:.2} -> setpoint {:.2} C; dear {:02}:00 mean {:.2} -> setpoint {:.2} C; contrast {:+.2} C",
            b.cheap_start_hour,
            b.cheap_mean_price,
            b.cheap_mean_setpoint_c,
            b.dear_start_hour,
            b.dear_mean_price,
            b.dear_mean_setpoint_c,
            b.setpoint_contrast_c()
        );
    }
}
