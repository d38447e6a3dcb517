//! Experiment drivers: single runs, hyperparameter sweeps, robustness
//! grids, and transfer of a trained policy onto new conditions.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::env::{synthesize, TraceSet};
use crate::error::{Error, Result};
use crate::harness::blocks::price_block_contrast;
use crate::harness::persist::{
    persist_run, write_comparison, write_steps_csv, Comparison, RunDir, RunMeta,
};
use crate::harness::runner::{evaluate_agent, evaluate_rbc, train, EvalOutcome, TrainOutcome};
use crate::sac::checkpoint;

/// Load the configured trace file, or synthesize one when no path is set.
pub fn load_or_synthesize(cfg: &RunConfig) -> Result<Arc<TraceSet>> {
    let traces = match &cfg.traces.path {
        Some(p) => TraceSet::load_with_step(p, cfg.run.sim_step_minutes)?,
        None => synthesize(&cfg.traces.synthetic, &cfg.schedule, cfg.run.sim_step_minutes)?,
    };
    Ok(Arc::new(traces))
}

/// Everything produced by one train-then-evaluate run.
pub struct RunOutcome {
    pub seed: u64,
    pub train: TrainOutcome,
    pub drl: EvalOutcome,
    pub rbc: EvalOutcome,
    pub comparison: Comparison,
}

/// Train with the given seed, then evaluate the trained policy and the
/// baseline on the configured evaluation window.
pub fn run_one(cfg: &RunConfig, traces: Arc<TraceSet>, seed: u64) -> Result<RunOutcome> {
    let mut outcome = train(cfg, traces.clone(), seed)?;
    let drl = evaluate_agent(cfg, traces.clone(), &mut outcome.agent)?;
    let rbc = evaluate_rbc(cfg, traces, cfg.run.eval_start, cfg.run.eval_end)?;
    // Block analysis needs a full daily cycle; shorter windows skip it.
    let blocks = price_block_contrast(&drl.records, 4).ok();
    let comparison = Comparison::new(drl.report, rbc.report, blocks);
    Ok(RunOutcome {
        seed,
        train: outcome,
        drl,
        rbc,
        comparison,
    })
}

/// Persist a full run under `root/<experiment>/<cell>/seed<N>/`.
pub fn persist_outcome(
    root: &Path,
    experiment: &str,
    cell: &str,
    cfg: &RunConfig,
    traces: &TraceSet,
    out: &RunOutcome,
) -> Result<RunDir> {
    let dir = RunDir::create(root, &[experiment, cell, &format!("seed{}", out.seed)])?;
    let meta = RunMeta {
        experiment: experiment.to_string(),
        cell: cell.to_string(),
        seed: out.seed,
        trace_sha256: String::new(),
    };
    persist_run(
        &dir, cfg, traces, &meta, &out.train, &out.drl, &out.rbc, &out.comparison,
    )?;
    Ok(dir)
}

/// One row of a sweep summary.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepRow {
    pub cell: String,
    pub gamma: f64,
    pub alpha: f64,
    pub lambda_comfort: f64,
    pub seed: u64,
    pub drl_cost: f64,
    pub rbc_cost: f64,
    pub pct_cost: Option<f64>,
    pub drl_discomfort_dh: f64,
    pub rbc_discomfort_dh: f64,
    pub pct_discomfort: Option<f64>,
    pub setpoint_contrast_c: Option<f64>,
}

fn cell_name(gamma: f64, alpha: f64, lambda: f64) -> String {
    format!("g{gamma}_a{alpha}_l{lambda}")
}

fn build_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::run(format!("cannot build worker pool: {e}")))
}

/// Full factorial sweep over the configured gamma/alpha/lambda grid and
/// seeds. Runs are independent and execute on `jobs` worker threads; the
/// summary is sorted by cell and seed, so its content does not depend on
/// the degree of parallelism.
pub fn sweep(
    cfg: &RunConfig,
    traces: Arc<TraceSet>,
    out_root: Option<&Path>,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    cfg.sweep.validate()?;
    let mut cells = Vec::new();
    for &gamma in &cfg.sweep.gammas {
        for &alpha in &cfg.sweep.alphas {
            for &lambda in &cfg.sweep.lambdas {
                for &seed in &cfg.sweep.seeds {
                    let mut c = cfg.clone();
                    c.hyperparams.gamma = gamma;
                    c.hyperparams.alpha = alpha;
                    c.hyperparams.lambda_comfort = lambda;
                    c.run.seed = seed;
                    cells.push((cell_name(gamma, alpha, lambda), c));
                }
            }
        }
    }

    let pool = build_pool(jobs)?;
    let mut rows = pool.install(|| {
        cells
            .par_iter()
            .map(|(name, c)| {
                let out = run_one(c, traces.clone(), c.run.seed)?;
                if let Some(root) = out_root {
                    persist_outcome(root, "sweep", name, c, &traces, &out)?;
                }
                Ok(SweepRow {
                    cell: name.clone(),
                    gamma: c.hyperparams.gamma,
                    alpha: c.hyperparams.alpha,
                    lambda_comfort: c.hyperparams.lambda_comfort,
                    seed: c.run.seed,
                    drl_cost: out.comparison.drl.cost,
                    rbc_cost: out.comparison.rbc.cost,
                    pct_cost: out.comparison.pct_cost,
                    drl_discomfort_dh: out.comparison.drl.discomfort_dh,
                    rbc_discomfort_dh: out.comparison.rbc.discomfort_dh,
                    pct_discomfort: out.comparison.pct_discomfort,
                    setpoint_contrast_c: out.comparison.blocks.map(|b| b.setpoint_contrast_c()),
                })
            })
            .collect::<Result<Vec<SweepRow>>>()
    })?;
    rows.sort_by(|a, b| a.cell.cmp(&b.cell).then(a.seed.cmp(&b.seed)));

    if let Some(root) = out_root {
        let dir = RunDir::create(root, &["sweep"])?;
        let mut w = csv::Writer::from_path(dir.file("summary.csv"))
            .map_err(|e| Error::run(format!("sweep summary: {e}")))?;
        for row in &rows {
            w.serialize(row)
                .map_err(|e| Error::run(format!("sweep summary: {e}")))?;
        }
        w.flush()?;
    }
    Ok(rows)
}

/// One row of the training-budget robustness grid.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RobustnessRow {
    pub episodes: u32,
    pub update_interval_steps: u64,
    pub drl_cost: f64,
    pub rbc_cost: f64,
    pub pct_cost: Option<f64>,
    pub drl_discomfort_dh: f64,
    pub rbc_discomfort_dh: f64,
    pub pct_discomfort: Option<f64>,
    /// Discomfort accumulated across all training episodes.
    pub train_discomfort_dh: f64,
    /// Baseline discomfort over one pass of the same training window.
    pub rbc_train_discomfort_dh: f64,
    /// True when evaluation discomfort exceeds the configured threshold
    /// relative to the baseline.
    pub excluded: bool,
}

/// Train-budget robustness grid: every combination of episode count and
/// update interval from the robustness section, trained on its shortened
/// window with its minibatch override.
pub fn robustness(
    cfg: &RunConfig,
    traces: Arc<TraceSet>,
    out_root: Option<&Path>,
    jobs: usize,
) -> Result<Vec<RobustnessRow>> {
    let rb = &cfg.robustness;
    rb.validate()?;
    let mut base = cfg.clone();
    base.run.train_start = rb.train_start;
    base.run.train_end = rb.train_end;
    base.run.seed = rb.seed;
    base.hyperparams.minibatch_size = rb.minibatch_size;

    let rbc_train = evaluate_rbc(&base, traces.clone(), rb.train_start, rb.train_end)?;
    let rbc_train_dh = rbc_train.report.discomfort_dh;

    let mut cells = Vec::new();
    for &episodes in &rb.episodes {
        for &interval in &rb.update_intervals {
            let mut c = base.clone();
            c.run.episodes = episodes;
            c.hyperparams.update_interval_steps = interval;
            cells.push(c);
        }
    }

    let pool = build_pool(jobs)?;
    let mut rows = pool.install(|| {
        cells
            .par_iter()
            .map(|c| {
                let out = run_one(c, traces.clone(), c.run.seed)?;
                if let Some(root) = out_root {
                    let cell = format!(
                        "ep{}_int{}",
                        c.run.episodes, c.hyperparams.update_interval_steps
                    );
                    persist_outcome(root, "robustness", &cell, c, &traces, &out)?;
                }
                let train_dh: f64 = out.train.episodes.iter().map(|e| e.discomfort_dh).sum();
                let drl_dh = out.comparison.drl.discomfort_dh;
                let rbc_dh = out.comparison.rbc.discomfort_dh;
                let excluded = drl_dh > rb.exclusion_threshold_pct / 100.0 * rbc_dh;
                Ok(RobustnessRow {
                    episodes: c.run.episodes,
                    update_interval_steps: c.hyperparams.update_interval_steps,
                    drl_cost: out.comparison.drl.cost,
                    rbc_cost: out.comparison.rbc.cost,
                    pct_cost: out.comparison.pct_cost,
                    drl_discomfort_dh: drl_dh,
                    rbc_discomfort_dh: rbc_dh,
                    pct_discomfort: out.comparison.pct_discomfort,
                    train_discomfort_dh: train_dh,
                    rbc_train_discomfort_dh: rbc_train_dh,
                    excluded,
                })
            })
            .collect::<Result<Vec<RobustnessRow>>>()
    })?;
    rows.sort_by(|a, b| {
        a.episodes
            .cmp(&b.episodes)
            .then(a.update_interval_steps.cmp(&b.update_interval_steps))
    });

    if let Some(root) = out_root {
        let dir = RunDir::create(root, &["robustness"])?;
        let mut w = csv::Writer::from_path(dir.file("grid.csv"))
            .map_err(|e| Error::run(format!("robustness grid: {e}")))?;
        for row in &rows {
            w.serialize(row)
                .map_err(|e| Error::run(format!("robustness grid: {e}")))?;
        }
        w.flush()?;
    }
    Ok(rows)
}

/// Evaluate a previously trained checkpoint on this configuration's traces
/// and evaluation window, against the baseline.
pub fn transfer(
    checkpoint_path: &Path,
    cfg: &RunConfig,
    traces: Arc<TraceSet>,
    out_root: Option<&Path>,
) -> Result<Comparison> {
    let (mut agent, set) = checkpoint::load(checkpoint_path)?;
    let cfg_set = cfg.run.set();
    if set != cfg_set {
        return Err(Error::config(format!(
            "checkpoint was trained on state-space set {} but the configuration requests set {}",
            set.index(),
            cfg_set.index()
        )));
    }
    let drl = evaluate_agent(cfg, traces.clone(), &mut agent)?;
    let rbc = evaluate_rbc(cfg, traces.clone(), cfg.run.eval_start, cfg.run.eval_end)?;
    let blocks = price_block_contrast(&drl.records, 4).ok();
    let cmp = Comparison::new(drl.report, rbc.report, blocks);
    if let Some(root) = out_root {
        let dir = RunDir::create(root, &["transfer"])?;
        let step_hours = f64::from(cfg.run.sim_step_minutes) / 60.0;
        write_steps_csv(&dir.file("eval_drl.csv"), &drl.records, step_hours)?;
        write_steps_csv(&dir.file("eval_rbc.csv"), &rbc.records, step_hours)?;
        write_comparison(&dir.file("comparison.toml"), &cmp)?;
    }
    Ok(cmp)
}
