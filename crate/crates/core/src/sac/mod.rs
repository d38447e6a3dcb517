//! Soft actor-critic: replay buffer, agent, and checkpointing.

pub mod agent;
pub mod buffer;
pub mod checkpoint;

pub use agent::{soft_targets, SacAgent, UpdateStats};
pub use buffer::{ReplayBuffer, Transition};
