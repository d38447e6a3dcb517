//! Reward shaping and episode-level comparison metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One simulation step's contribution to the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// Energy-cost penalty: `-beta * e_hvac * price` (always <= 0).
    pub cost_term: f64,
    /// Comfort penalty: `-lambda * |t_zone - t_lim|` (always <= 0).
    pub comfort_term: f64,
    pub total: f64,
}

/// Penalized reward for one simulation step.
///
/// The comfort reference `t_lim` is the nearest comfort bound when the zone
/// temperature is outside the band and the temperature itself when inside,
/// so the comfort penalty is exactly the distance to the band.
pub fn reward(
    e_hvac_kwh: f64,
    price: f64,
    t_zone: f64,
    t_min: f64,
    t_max: f64,
    beta: f64,
    lambda: f64,
) -> RewardBreakdown {
    let cost_term = -beta * e_hvac_kwh * price;
    let t_lim = t_zone.clamp(t_min, t_max);
    let comfort_term = -lambda * (t_zone - t_lim).abs();
    RewardBreakdown {
        cost_term,
        comfort_term,
        total: cost_term + comfort_term,
    }
}

/// Degrees outside the comfort band times the step duration, in degC hours.
pub fn discomfort_degree_hours(t_zone: f64, t_min: f64, t_max: f64, step_hours: f64) -> f64 {
    let excess = (t_min - t_zone).max(t_zone - t_max).max(0.0);
    excess * step_hours
}

/// Relative change of `candidate` versus `reference` in percent. `None` when
/// the reference is zero (no meaningful percentage exists).
pub fn pct_change(candidate: f64, reference: f64) -> Option<f64> {
    if reference == 0.0 {
        None
    } else {
        Some(100.0 * (candidate - reference) / reference)
    }
}

/// Percentage cost change of a controller versus the baseline.
pub fn pct_change_cost(candidate_cost: f64, baseline_cost: f64) -> Option<f64> {
    pct_change(candidate_cost, baseline_cost)
}

/// Percentage discomfort change of a controller versus the baseline.
pub fn pct_change_discomfort(candidate_dh: f64, baseline_dh: f64) -> Option<f64> {
    pct_change(candidate_dh, baseline_dh)
}

/// Aggregated outcome of one episode (or evaluation window).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    /// Whole-building electrical energy, kWh.
    pub energy_kwh: f64,
    /// HVAC share of the energy, kWh.
    pub hvac_kwh: f64,
    /// Whole-building energy cost, currency units.
    pub cost: f64,
    /// Comfort violation, degC hours.
    pub discomfort_dh: f64,
    pub reward_total: f64,
    pub reward_cost: f64,
    pub reward_comfort: f64,
    pub steps: usize,
}

/// Per-step quantities needed for episode aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSample {
    pub e_hvac_kwh: f64,
    pub e_total_kwh: f64,
    pub price: f64,
    pub t_zone: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub step_hours: f64,
    pub reward: RewardBreakdown,
}

/// Streaming episode aggregation, so a long training run never has to
/// hold per-step samples in memory.
#[derive(Debug, Clone, Default)]
pub struct EpisodeAccumulator {
    energy_kwh: f64,
    hvac_kwh: f64,
    cost: f64,
    discomfort_dh: f64,
    reward_total: f64,
    reward_cost: f64,
    reward_comfort: f64,
    steps: usize,
}

impl EpisodeAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, s: &StepSample) {
        self.energy_kwh += s.e_total_kwh;
        self.hvac_kwh += s.e_hvac_kwh;
        self.cost += s.e_total_kwh * s.price;
        self.discomfort_dh += discomfort_degree_hours(s.t_zone, s.t_min, s.t_max, s.step_hours);
        self.reward_total += s.reward.total;
        self.reward_cost += s.reward.cost_term;
        self.reward_comfort += s.reward.comfort_term;
        self.steps += 1;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn finish(&self) -> Result<EpisodeReport> {
        if self.steps == 0 {
            return Err(Error::run("cannot aggregate an empty episode"));
        }
        Ok(EpisodeReport {
            energy_kwh: self.energy_kwh,
            hvac_kwh: self.hvac_kwh,
            cost: self.cost,
            discomfort_dh: self.discomfort_dh,
            reward_total: self.reward_total,
            reward_cost: self.reward_cost,
            reward_comfort: self.reward_comfort,
            steps: self.steps,
        })
    }
}

/// Sum per-step samples into an episode report.
pub fn episode_report(samples: &[StepSample]) -> Result<EpisodeReport> {
    let mut acc = EpisodeAccumulator::new();
    for s in samples {
        acc.push(s);
    }
    acc.finish()
}
