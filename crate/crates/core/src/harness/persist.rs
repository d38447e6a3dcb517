//! Run directories and on-disk artifacts.
//!
//! Every run gets its own directory holding an exact config snapshot, the
//! identity of the weather trace it consumed, training curves, evaluation
//! roll-outs, and the agent checkpoint, so any result can be traced back
//! to its inputs and reproduced.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::env::{SimStepRecord, TraceSet};
use crate::error::{Error, Result};
use crate::harness::blocks::BlockContrast;
use crate::harness::runner::{EpisodeRow, EvalOutcome, LossRow, TrainOutcome};
use crate::reward::{pct_change_cost, pct_change_discomfort, EpisodeReport};
use crate::sac::checkpoint;
use crate::sac::SacAgent;

/// A created run directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    /// Create `root/part1/part2/...`, making parents as needed.
    pub fn create(root: &Path, parts: &[&str]) -> Result<Self> {
        let mut path = root.to_path_buf();
        for p in parts {
            path.push(p);
        }
        std::fs::create_dir_all(&path)?;
        Ok(RunDir { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }
}

/// Provenance sidecar written next to every run's outputs.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct RunMeta {
    pub experiment: String,
    pub cell: String,
    pub seed: u64,
    /// SHA-256 of the canonical CSV form of the weather/price trace.
    pub trace_sha256: String,
}

/// Side-by-side evaluation of the trained policy and the baseline.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub drl: EpisodeReport,
    pub rbc: EpisodeReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pct_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pct_discomfort: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockContrast>,
}

impl Comparison {
    pub fn new(drl: EpisodeReport, rbc: EpisodeReport, blocks: Option<BlockContrast>) -> Self {
        Comparison {
            pct_cost: pct_change_cost(drl.cost, rbc.cost),
            pct_discomfort: pct_change_discomfort(drl.discomfort_dh, rbc.discomfort_dh),
            drl,
            rbc,
            blocks,
        }
    }
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = toml::to_string_pretty(value)
        .map_err(|e| Error::run(format!("cannot serialize {}: {e}", path.display())))?;
    std::fs::write(path, s)?;
    Ok(())
}

pub fn write_config_snapshot(path: &Path, cfg: &RunConfig) -> Result<()> {
    std::fs::write(path, cfg.to_toml_string()?)?;
    Ok(())
}

pub fn write_meta(path: &Path, meta: &RunMeta) -> Result<()> {
    write_toml(path, meta)
}

pub fn write_comparison(path: &Path, cmp: &Comparison) -> Result<()> {
    write_toml(path, cmp)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path)
        .map_err(|e| Error::run(format!("cannot open {}: {e}", path.display())))
}

pub fn write_episodes_csv(path: &Path, rows: &[EpisodeRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::run(format!("episode csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_losses_csv(path: &Path, rows: &[LossRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::run(format!("loss csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StepCsvRow {
    timestamp: String,
    setpoint_c: f64,
    t_zone_c: f64,
    t_zone_avg_c: f64,
    t_mass_c: f64,
    tes_soc: f64,
    q_cool_kw: f64,
    q_charge_kw: f64,
    q_discharge_kw: f64,
    e_hvac_kw: f64,
    e_total_kw: f64,
    price: f64,
    occupied: bool,
    reward: f64,
    reward_cost: f64,
    reward_comfort: f64,
}

/// Per-simulation-step roll-out log. Energies are converted to average kW
/// over the step for easier plotting.
pub fn write_steps_csv(path: &Path, records: &[SimStepRecord], step_hours: f64) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in records {
        let row = StepCsvRow {
            timestamp: format!("{}Z", r.timestamp.format("%Y-%m-%dT%H:%M:%S")),
            setpoint_c: r.setpoint_c,
            t_zone_c: r.t_zone_c,
            t_zone_avg_c: r.t_zone_avg_c,
            t_mass_c: r.t_mass_c,
            tes_soc: r.tes_soc,
            q_cool_kw: r.q_cool_kw,
            q_charge_kw: r.q_charge_kw,
            q_discharge_kw: r.q_discharge_kw,
            e_hvac_kw: r.e_hvac_kwh / step_hours,
            e_total_kw: r.e_total_kwh / step_hours,
            price: r.price,
            occupied: r.occupied,
            reward: r.reward.total,
            reward_cost: r.reward.cost_term,
            reward_comfort: r.reward.comfort_term,
        };
        w.serialize(row)
            .map_err(|e| Error::run(format!("step csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Write the full artifact set for one training run.
#[allow(clippy::too_many_arguments)]
pub fn persist_run(
    dir: &RunDir,
    cfg: &RunConfig,
    traces: &TraceSet,
    meta: &RunMeta,
    out: &TrainOutcome,
    drl: &EvalOutcome,
    rbc: &EvalOutcome,
    cmp: &Comparison,
) -> Result<()> {
    write_config_snapshot(&dir.file("config.toml"), cfg)?;
    let mut meta = meta.clone();
    meta.trace_sha256 = traces.content_hash();
    write_meta(&dir.file("meta.toml"), &meta)?;
    write_episodes_csv(&dir.file("episodes.csv"), &out.episodes)?;
    write_losses_csv(&dir.file("losses.csv"), &out.losses)?;
    let step_hours = f64::from(cfg.run.sim_step_minutes) / 60.0;
    write_steps_csv(&dir.file("eval_drl.csv"), &drl.records, step_hours)?;
    write_steps_csv(&dir.file("eval_rbc.csv"), &rbc.records, step_hours)?;
    write_comparison(&dir.file("comparison.toml"), cmp)?;
    checkpoint::save(&out.agent, cfg.run.set(), &dir.file("checkpoint.bin"))?;
    Ok(())
}

/// Save just a checkpoint for an agent (used outside full runs).
pub fn save_checkpoint(dir: &RunDir, cfg: &RunConfig, agent: &SacAgent) -> Result<()> {
    checkpoint::save(agent, cfg.run.set(), &dir.file("checkpoint.bin"))
}
