//! Demand-response control of a thermally massive office building.
//!
//! The crate bundles a fast two-node thermal simulator with storage and
//! weather/price traces, a from-scratch soft actor-critic agent (dense
//! networks, Adam, squashed-Gaussian policy), the reward and comparison
//! metrics, and an experiment harness that drives training, evaluation,
//! sweeps, and robustness studies from a single TOML config.

pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod norm;
pub mod reward;
pub mod rng;
pub mod sac;

pub use config::{
    DeploymentMode, HyperParams, RunConfig, StateSpaceSet, SCHEMA_VERSION,
};
pub use env::{BuildingEnv, BuildingState, ComfortSchedule, StepResult, TraceSet};
pub use error::{Error, Result};
pub use norm::{denormalize_action, normalize, NormalizationSpec, Quantity};
pub use reward::{
    discomfort_degree_hours, episode_report, pct_change_cost, pct_change_discomfort, reward,
    EpisodeReport, RewardBreakdown,
};
pub use rng::{seeded_rng, Rng};
