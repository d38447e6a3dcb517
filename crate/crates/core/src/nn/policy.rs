//! Squashed-Gaussian policy head.
//!
//! The policy network outputs a mean and a log stddev per action
//! dimension. A pre-squash sample u = mean + std * eps is mapped into the
//! unit interval with a = (tanh(u) + 1) / 2, and the log-density picks up
//! the change-of-variables term. The squash Jacobian is evaluated through
//! softplus so it stays finite for |u| far beyond where tanh saturates.

use std::f64::consts::{LN_2, PI};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Numerically stable ln(1 + exp(x)).
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic sigmoid 1 / (1 + exp(-x)).
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Map a pre-squash value into (0, 1).
#[inline]
pub fn squash(u: f64) -> f64 {
    0.5 * (u.tanh() + 1.0)
}

/// ln(1 - tanh(u)^2) evaluated without catastrophic cancellation.
#[inline]
pub fn ln_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (LN_2 - u - softplus(-2.0 * u))
}

/// One sampled action with everything the update step needs.
#[derive(Debug, Clone, Copy)]
pub struct GaussianSample {
    /// Action in (0, 1).
    pub action: f64,
    /// Pre-squash value u = mean + std * eps.
    pub pre_squash: f64,
    /// Raw network mean output.
    pub mean: f64,
    /// Log stddev after clamping.
    pub log_std: f64,
    /// Standard normal noise used for reparameterization.
    pub eps: f64,
    /// log pi(action) including the squash correction.
    pub log_prob: f64,
    /// Whether the raw log-std hit the clamp (its gradient is then zero).
    pub clamped: bool,
}

/// Sample via the reparameterization trick from raw network outputs.
pub fn sample_squashed(mean: f64, log_std_raw: f64, eps: f64) -> GaussianSample {
    let log_std = log_std_raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
    let clamped = log_std != log_std_raw;
    let std = log_std.exp();
    let u = mean + std * eps;
    GaussianSample {
        action: squash(u),
        pre_squash: u,
        mean,
        log_std,
        eps,
        log_prob: log_prob_parts(log_std, eps, u),
        clamped,
    }
}

/// Deterministic deployment action: squash of the mean, no noise.
pub fn deterministic_action(mean: f64) -> f64 {
    squash(mean)
}

/// log pi(a) for a reparameterized sample, written in terms of the noise:
/// the Gaussian part is -eps^2/2 - log_std - ln(2 pi)/2 and the squash
/// contributes -(ln(1 - tanh(u)^2) - ln 2).
fn log_prob_parts(log_std: f64, eps: f64, u: f64) -> f64 {
    let gauss = -0.5 * eps * eps - log_std - 0.5 * (2.0 * PI).ln();
    gauss - (ln_one_minus_tanh_sq(u) - LN_2)
}

/// log pi(a) for an arbitrary pre-squash value under the given parameters.
pub fn log_prob(mean: f64, log_std_raw: f64, u: f64) -> f64 {
    let log_std = log_std_raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
    let eps = (u - mean) / log_std.exp();
    log_prob_parts(log_std, eps, u)
}

/// Pathwise derivatives of one sample w.r.t. the raw network outputs.
///
/// With u = mean + exp(log_std) * eps and t = tanh(u):
///   d log_prob / d mean    = 2 t
///   d log_prob / d log_std = -1 + 2 t * std * eps
///   d action / d mean      = (1 - t^2) / 2
///   d action / d log_std   = (1 - t^2) / 2 * std * eps
/// A clamped log-std passes no gradient.
#[derive(Debug, Clone, Copy)]
pub struct SampleGrads {
    pub dlogp_dmean: f64,
    pub dlogp_dlogstd: f64,
    pub daction_dmean: f64,
    pub daction_dlogstd: f64,
}

pub fn sample_grads(s: &GaussianSample) -> SampleGrads {
    let t = s.pre_squash.tanh();
    let sech2 = 1.0 - t * t;
    let std_eps = s.log_std.exp() * s.eps;
    let mask = if s.clamped { 0.0 } else { 1.0 };
    SampleGrads {
        dlogp_dmean: 2.0 * t,
        dlogp_dlogstd: mask * (-1.0 + 2.0 * t * std_eps),
        daction_dmean: 0.5 * sech2,
        daction_dlogstd: mask * 0.5 * sech2 * std_eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    use crate::rng::seeded_rng;

    #[test]
    fn squash_lands_in_unit_interval_and_is_monotone() {
        // Strictly inside and strictly increasing until tanh saturates to
        // exactly +-1 in f64 (around |u| = 19); weakly bounded beyond.
        let mut prev = -1.0;
        for i in -72..=72 {
            let u = i as f64 * 0.25;
            let a = squash(u);
            assert!(a > 0.0 && a < 1.0, "u={u}");
            assert!(a > prev, "u={u}");
            prev = a;
        }
        for &u in &[-500.0, -50.0, 50.0, 500.0] {
            let a = squash(u);
            assert!((0.0..=1.0).contains(&a));
        }
        assert!((squash(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stable_log_jacobian_matches_naive_form_in_safe_range() {
        // The naive form loses digits to cancellation as |u| grows, so
        // compare with a tolerance that covers its own rounding error.
        for i in -60..=60 {
            let u = i as f64 * 0.1;
            let naive = (1.0 - u.tanh().powi(2)).ln();
            assert!((ln_one_minus_tanh_sq(u) - naive).abs() < 1e-9, "u={u}");
        }
    }

    #[test]
    fn log_prob_stays_finite_where_tanh_saturates() {
        for &u in &[-50.0, -37.5, 37.5, 50.0, 300.0] {
            let lp = log_prob(0.0, 0.0, u);
            assert!(lp.is_finite(), "u={u} gave {lp}");
        }
        // The naive form underflows to ln(0) well before u = 50.
        assert!((1.0f64 - 50.0f64.tanh().powi(2)).ln().is_infinite());
    }

    #[test]
    fn log_std_clamp_applies_and_flags() {
        let s = sample_squashed(0.0, -35.0, 1.0);
        assert_eq!(s.log_std, LOG_STD_MIN);
        assert!(s.clamped);
        let g = sample_grads(&s);
        assert_eq!(g.dlogp_dlogstd, 0.0);
        assert_eq!(g.daction_dlogstd, 0.0);
        let s2 = sample_squashed(0.0, 0.3, -0.2);
        assert!(!s2.clamped);
    }

    /// The squashed density must integrate to one over (0, 1). Integrate
    /// exp(log_prob) on a fine midpoint grid in action space, mapping each
    /// action back to u = atanh(2a - 1).
    #[test]
    fn density_integrates_to_one() {
        for &(mean, log_std) in &[(0.0, 0.0), (0.3, -0.5), (-0.8, 0.4), (1.2, -1.5)] {
            let n = 20_000;
            let lo = 1e-7;
            let hi = 1.0 - 1e-7;
            let h = (hi - lo) / n as f64;
            let mut integral = 0.0;
            for k in 0..n {
                let a = lo + (k as f64 + 0.5) * h;
                let u = (2.0 * a - 1.0).atanh();
                integral += log_prob(mean, log_std, u).exp() * h;
            }
            assert!(
                (integral - 1.0).abs() < 1e-2,
                "mean={mean} log_std={log_std} integral={integral}"
            );
        }
    }

    #[test]
    fn sampled_log_prob_agrees_with_density_at_the_sample() {
        let mut rng = seeded_rng(17, "policy-test");
        for _ in 0..200 {
            let mean = rng.gen_range(-2.0..2.0);
            let log_std = rng.gen_range(-3.0..0.5);
            let eps: f64 = rng.sample(StandardNormal);
            let s = sample_squashed(mean, log_std, eps);
            let lp = log_prob(mean, log_std, s.pre_squash);
            assert!((s.log_prob - lp).abs() < 1e-10);
        }
    }

    /// Monte Carlo entropy -E[log pi] with common random numbers should
    /// increase with the stddev.
    #[test]
    fn entropy_grows_with_log_std() {
        let mut rng = seeded_rng(23, "policy-entropy");
        let noise: Vec<f64> = (0..4000).map(|_| rng.sample(StandardNormal)).collect();
        let entropy = |log_std: f64| -> f64 {
            let s: f64 = noise
                .iter()
                .map(|&e| sample_squashed(0.2, log_std, e).log_prob)
                .sum();
            -s / noise.len() as f64
        };
        let h = [entropy(-2.0), entropy(-1.0), entropy(-0.3)];
        assert!(h[0] < h[1] && h[1] < h[2], "{h:?}");
    }

    /// Central finite differences over (mean, log_std) with eps held fixed
    /// confirm the pathwise derivative formulas.
    #[test]
    fn pathwise_gradients_match_finite_differences() {
        let mut rng = seeded_rng(29, "policy-grads");
        let h = 1e-6;
        for _ in 0..300 {
            let mean = rng.gen_range(-1.5..1.5);
            let log_std = rng.gen_range(-2.5..0.5);
            let eps: f64 = rng.sample(StandardNormal);
            let s = sample_squashed(mean, log_std, eps);
            let g = sample_grads(&s);

            let sp = sample_squashed(mean + h, log_std, eps);
            let sm = sample_squashed(mean - h, log_std, eps);
            let fd_lp_mean = (sp.log_prob - sm.log_prob) / (2.0 * h);
            let fd_a_mean = (sp.action - sm.action) / (2.0 * h);
            assert!((g.dlogp_dmean - fd_lp_mean).abs() < 1e-5, "dlogp/dmean");
            assert!((g.daction_dmean - fd_a_mean).abs() < 1e-7, "da/dmean");

            let tp = sample_squashed(mean, log_std + h, eps);
            let tm = sample_squashed(mean, log_std - h, eps);
            let fd_lp_ls = (tp.log_prob - tm.log_prob) / (2.0 * h);
            let fd_a_ls = (tp.action - tm.action) / (2.0 * h);
            assert!((g.dlogp_dlogstd - fd_lp_ls).abs() < 1e-4, "dlogp/dlogstd");
            assert!((g.daction_dlogstd - fd_a_ls).abs() < 1e-6, "da/dlogstd");
        }
    }

    #[test]
    fn deterministic_action_is_squashed_mean() {
        assert_eq!(deterministic_action(0.0), 0.5);
        assert!((deterministic_action(3.0) - squash(3.0)).abs() < 1e-15);
    }
}
