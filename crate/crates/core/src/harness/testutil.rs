//! Shared fixtures for harness tests: a config small enough that training
//! finishes in milliseconds, with a matching synthetic trace.

use std::sync::Arc;

use chrono::NaiveDate;

use crate::config::RunConfig;
use crate::env::{synthesize, TraceSet};

pub(crate) fn tiny_cfg() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.run.episodes = 2;
    cfg.run.train_start = NaiveDate::from_ymd_opt(2017, 4, 3).unwrap();
    cfg.run.train_end = NaiveDate::from_ymd_opt(2017, 4, 5).unwrap();
    cfg.run.eval_start = NaiveDate::from_ymd_opt(2017, 4, 10).unwrap();
    cfg.run.eval_end = NaiveDate::from_ymd_opt(2017, 4, 11).unwrap();
    cfg.traces.synthetic.days = 18;
    cfg.hyperparams.hidden_size = 8;
    cfg.hyperparams.minibatch_size = 32;
    cfg.hyperparams.warmup_control_steps = 8;
    cfg.hyperparams.update_interval_steps = 24;
    cfg.hyperparams.buffer_capacity = 8192;
    cfg
}

pub(crate) fn tiny_traces(cfg: &RunConfig) -> Arc<TraceSet> {
    Arc::new(synthesize(&cfg.traces.synthetic, &cfg.schedule, cfg.run.sim_step_minutes).unwrap())
}
