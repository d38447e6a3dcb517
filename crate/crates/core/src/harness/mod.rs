//! Experiment harness: training loops, evaluation, persistence, analysis.

pub mod blocks;
pub mod experiments;
pub mod persist;
pub mod runner;
#[cfg(test)]
pub(crate) mod testutil;

pub use blocks::{price_block_contrast, BlockContrast};
pub use experiments::{
    load_or_synthesize, persist_outcome, robustness, run_one, sweep, transfer, RobustnessRow,
    RunOutcome, SweepRow,
};
pub use persist::{persist_run, Comparison, RunDir, RunMeta};
pub use runner::{
    evaluate, evaluate_agent, evaluate_rbc, train, Controller, EpisodeRow, EvalOutcome, LossRow,
    TrainOutcome,
};
