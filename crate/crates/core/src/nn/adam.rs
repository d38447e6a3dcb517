//! Adam optimizer with bias correction.

use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;

/// First/second moment estimates for one parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        AdamState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    /// Rebuild from persisted moments.
    pub fn from_parts(m: Vec<f64>, v: Vec<f64>, t: u64) -> Result<Self> {
        if m.len() != v.len() {
            return Err(Error::Dimension {
                what: "adam moment vectors",
                expected: m.len(),
                got: v.len(),
            });
        }
        Ok(AdamState { m, v, t })
    }

    /// One update step. Rejects non-finite gradients without touching any
    /// state so a caller can skip a poisoned minibatch.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::Dimension {
                what: "adam parameter vector",
                expected: self.m.len(),
                got: params.len(),
            });
        }
        if grads.len() != params.len() {
            return Err(Error::Dimension {
                what: "adam gradient vector",
                expected: params.len(),
                got: grads.len(),
            });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::numeric("non-finite gradient in adam step"));
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
        Ok(())
    }
}
