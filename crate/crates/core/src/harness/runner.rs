//! Training and evaluation loops over the building environment.

use std::sync::Arc;

use chrono::NaiveDate;
use serde::Serialize;

use crate::config::{DeploymentMode, RunConfig};
use crate::env::{BuildingEnv, SimStepRecord, TraceSet};
use crate::error::Result;
use crate::norm::denormalize_action;
use crate::reward::{EpisodeAccumulator, EpisodeReport};
use crate::sac::{SacAgent, Transition};

/// One row of the per-episode training curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpisodeRow {
    pub episode: u32,
    pub reward_total: f64,
    pub reward_cost: f64,
    pub reward_comfort: f64,
    pub cost: f64,
    pub hvac_kwh: f64,
    pub discomfort_dh: f64,
}

/// One row of the per-update loss log.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossRow {
    pub update: u64,
    pub sim_step: u64,
    pub q1_loss: f64,
    pub q2_loss: f64,
    pub policy_loss: f64,
    pub entropy: f64,
}

pub struct TrainOutcome {
    pub agent: SacAgent,
    pub episodes: Vec<EpisodeRow>,
    pub losses: Vec<LossRow>,
}

/// Train a fresh agent on the configured training window.
///
/// Transitions are recorded at control-step granularity with the reward
/// summed over the held simulation steps. Gradient updates fire whenever
/// the cumulative simulation-step counter crosses a multiple of the update
/// interval; the counter runs across episode boundaries so the cadence
/// does not reset with each season pass.
pub fn train(cfg: &RunConfig, traces: Arc<TraceSet>, seed: u64) -> Result<TrainOutcome> {
    let set = cfg.run.set();
    let mut agent = SacAgent::new(set.dim(), cfg.hyperparams.clone(), seed)?;
    let mut env = BuildingEnv::new(cfg, traces)?;
    let hold = u64::from(env.hold_steps());
    let interval = cfg.hyperparams.update_interval_steps;
    let step_hours = env.step_hours();

    let mut total_sim_steps = 0u64;
    let mut episodes = Vec::with_capacity(cfg.run.episodes as usize);
    let mut losses = Vec::new();
    for ep in 0..cfg.run.episodes {
        let mut obs = env.reset(cfg.run.train_start, cfg.run.train_end)?;
        let mut acc = EpisodeAccumulator::new();
        loop {
            let action = agent.act_train(&obs)?;
            let res = env.step(denormalize_action(action))?;
            for rec in &res.records {
                acc.push(&rec.step_sample(step_hours));
            }
            agent.record(Transition {
                obs,
                action,
                reward: res.reward_total,
                next_obs: res.observation.clone(),
                done: res.done,
            })?;
            obs = res.observation;

            let prev_triggers = total_sim_steps / interval;
            total_sim_steps += hold;
            let triggers = total_sim_steps / interval - prev_triggers;
            for _ in 0..triggers {
                for _ in 0..cfg.hyperparams.gradient_steps {
                    if agent.can_update() {
                        let st = agent.update()?;
                        losses.push(LossRow {
                            update: agent.updates_done(),
                            sim_step: total_sim_steps,
                            q1_loss: st.q1_loss,
                            q2_loss: st.q2_loss,
                            policy_loss: st.policy_loss,
                            entropy: st.entropy,
                        });
                    }
                }
            }
            if res.done {
                break;
            }
        }
        let rep = acc.finish()?;
        episodes.push(EpisodeRow {
            episode: ep + 1,
            reward_total: rep.reward_total,
            reward_cost: rep.reward_cost,
            reward_comfort: rep.reward_comfort,
            cost: rep.cost,
            hvac_kwh: rep.hvac_kwh,
            discomfort_dh: rep.discomfort_dh,
        });
    }
    Ok(TrainOutcome {
        agent,
        episodes,
        losses,
    })
}

/// Who picks the setpoint during an evaluation roll-out.
pub enum Controller<'a> {
    /// Trained policy, deterministic (squashed mean).
    Greedy(&'a SacAgent),
    /// Trained policy, sampling from the squashed Gaussian.
    Stochastic(&'a mut SacAgent),
    /// Rule-based schedule baseline.
    Rbc,
}

pub struct EvalOutcome {
    pub report: EpisodeReport,
    pub records: Vec<SimStepRecord>,
}

/// Roll a controller over `[start, end]` (dates inclusive) and aggregate.
pub fn evaluate(
    cfg: &RunConfig,
    traces: Arc<TraceSet>,
    mut controller: Controller,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<EvalOutcome> {
    let mut env = BuildingEnv::new(cfg, traces)?;
    let step_hours = env.step_hours();
    let mut obs = env.reset(start, end)?;
    let mut acc = EpisodeAccumulator::new();
    let mut records = Vec::new();
    loop {
        let setpoint = match &mut controller {
            Controller::Greedy(agent) => denormalize_action(agent.act_greedy(&obs)?),
            Controller::Stochastic(agent) => denormalize_action(agent.act_stochastic(&obs)?),
            Controller::Rbc => env.rbc_setpoint(),
        };
        let res = env.step(setpoint)?;
        for rec in &res.records {
            acc.push(&rec.step_sample(step_hours));
            records.push(rec.clone());
        }
        obs = res.observation;
        if res.done {
            break;
        }
    }
    Ok(EvalOutcome {
        report: acc.finish()?,
        records,
    })
}

/// Evaluate a trained agent on the configured evaluation window using the
/// configured deployment mode.
pub fn evaluate_agent(
    cfg: &RunConfig,
    traces: Arc<TraceSet>,
    agent: &mut SacAgent,
) -> Result<EvalOutcome> {
    let controller = match cfg.run.deployment {
        DeploymentMode::Deterministic => Controller::Greedy(agent),
        DeploymentMode::Stochastic => Controller::Stochastic(agent),
    };
    evaluate(cfg, traces, controller, cfg.run.eval_start, cfg.run.eval_end)
}

/// Evaluate the rule-based baseline on an arbitrary window.
pub fn evaluate_rbc(
    cfg: &RunConfig,
    traces: Arc<TraceSet>,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<EvalOutcome> {
    evaluate(cfg, traces, Controller::Rbc, start, end)
}
