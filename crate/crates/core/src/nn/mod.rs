//! Neural network primitives: dense nets, Adam, and the squashed policy head.

pub mod adam;
pub mod mlp;
pub mod policy;

pub use adam::AdamState;
pub use mlp::{ForwardCache, Matrix, Mlp};
pub use policy::{
    deterministic_action, ln_one_minus_tanh_sq, log_prob, sample_grads, sample_squashed,
    softplus, GaussianSample, SampleGrads, LOG_STD_MAX, LOG_STD_MIN,
};
