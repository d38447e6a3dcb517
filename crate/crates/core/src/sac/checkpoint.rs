//! Binary agent checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic            8 bytes  "SACA0001"
//! state space set  u8       1 | 2 | 3
//! obs_dim          u32
//! seed             u64      agent RNG seed
//! rng word pos     u128     agent RNG stream position
//! control_steps    u64
//! updates_done     u64
//! hyperparameters  6 x f64  gamma, alpha, lambda_comfort, beta,
//!                           learning_rate, tau
//!                  4 x u64  buffer_capacity, minibatch_size,
//!                           update_interval_steps, warmup_control_steps
//!                  2 x u32  gradient_steps, hidden_size
//! networks         5 x      policy, q1, q2, q1_target, q2_target:
//!                           u32 layer count, u32 per layer size,
//!                           u64 parameter count, f64 per parameter
//! optimizers       3 x      policy, q1, q2 Adam state:
//!                           u64 step count, u64 length,
//!                           f64 per first moment, f64 per second moment
//! ```
//!
//! The replay buffer is intentionally not persisted: a restored agent
//! resumes with an empty buffer and refills it from new experience.

use std::path::Path;

use crate::config::{HyperParams, StateSpaceSet};
use crate::error::{Error, Result};
use crate::nn::{AdamState, Mlp};
use crate::sac::agent::SacAgent;

pub const MAGIC: &[u8; 8] = b"SACA0001";

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::checkpoint(format!(
                "truncated checkpoint: needed {n} bytes for {what} at offset {}, file has {}",
                self.pos,
                self.buf.len()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn u128(&mut self, what: &str) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = self.take(n * 8, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::checkpoint(format!(
                "trailing garbage: {} bytes past the end of the checkpoint",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn push_net(out: &mut Vec<u8>, net: &Mlp) {
    out.extend_from_slice(&(net.sizes().len() as u32).to_le_bytes());
    for &s in net.sizes() {
        out.extend_from_slice(&(s as u32).to_le_bytes());
    }
    out.extend_from_slice(&(net.n_params() as u64).to_le_bytes());
    for p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
}

fn read_net(r: &mut Reader, what: &str) -> Result<Mlp> {
    let n_sizes = r.u32(what)? as usize;
    if !(2..=16).contains(&n_sizes) {
        return Err(Error::checkpoint(format!(
            "{what}: implausible layer count {n_sizes}"
        )));
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        sizes.push(r.u32(what)? as usize);
    }
    let n_params = r.u64(what)? as usize;
    let params = r.f64_vec(n_params, what)?;
    Mlp::from_params(&sizes, params)
}

fn push_opt(out: &mut Vec<u8>, opt: &AdamState) {
    let (m, v) = opt.moments();
    out.extend_from_slice(&opt.steps_taken().to_le_bytes());
    out.extend_from_slice(&(m.len() as u64).to_le_bytes());
    for x in m {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn read_opt(r: &mut Reader, expected_len: usize, what: &str) -> Result<AdamState> {
    let t = r.u64(what)?;
    let n = r.u64(what)? as usize;
    if n != expected_len {
        return Err(Error::checkpoint(format!(
            "{what}: optimizer length {n} does not match network parameter count {expected_len}"
        )));
    }
    let m = r.f64_vec(n, what)?;
    let v = r.f64_vec(n, what)?;
    AdamState::from_parts(m, v, t)
}

pub fn to_bytes(agent: &SacAgent, set: StateSpaceSet) -> Result<Vec<u8>> {
    if agent.obs_dim() != set.dim() {
        return Err(Error::checkpoint(format!(
            "agent observes {} features but state-space set {} has {}",
            agent.obs_dim(),
            set.index(),
            set.dim()
        )));
    }
    let hp = agent.hyperparams();
    let (seed, word_pos) = agent.rng_state();
    let (control_steps, updates_done) = agent.counters();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(set.index() as u8);
    out.extend_from_slice(&(agent.obs_dim() as u32).to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    out.extend_from_slice(&word_pos.to_le_bytes());
    out.extend_from_slice(&control_steps.to_le_bytes());
    out.extend_from_slice(&updates_done.to_le_bytes());
    for v in [
        hp.gamma,
        hp.alpha,
        hp.lambda_comfort,
        hp.beta,
        hp.learning_rate,
        hp.tau,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [
        hp.buffer_capacity as u64,
        hp.minibatch_size as u64,
        hp.update_interval_steps,
        hp.warmup_control_steps,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&hp.gradient_steps.to_le_bytes());
    out.extend_from_slice(&(hp.hidden_size as u32).to_le_bytes());
    for net in agent.nets() {
        push_net(&mut out, net);
    }
    for opt in agent.opts() {
        push_opt(&mut out, opt);
    }
    Ok(out)
}

pub fn from_bytes(buf: &[u8]) -> Result<(SacAgent, StateSpaceSet)> {
    let mut r = Reader::new(buf);
    let magic = r.take(8, "magic")?;
    if magic != MAGIC {
        return Err(Error::checkpoint(format!(
            "bad magic {:02x?}, expected {:02x?}",
            magic, MAGIC
        )));
    }
    let set = StateSpaceSet::from_index(r.u8("state space set")?)?;
    let obs_dim = r.u32("obs_dim")? as usize;
    if obs_dim != set.dim() {
        return Err(Error::checkpoint(format!(
            "obs_dim {obs_dim} does not match state-space set {} ({} features)",
            set.index(),
            set.dim()
        )));
    }
    let seed = r.u64("seed")?;
    let word_pos = r.u128("rng word pos")?;
    let control_steps = r.u64("control_steps")?;
    let updates_done = r.u64("updates_done")?;
    let hp = HyperParams {
        gamma: r.f64("gamma")?,
        alpha: r.f64("alpha")?,
        lambda_comfort: r.f64("lambda_comfort")?,
        beta: r.f64("beta")?,
        learning_rate: r.f64("learning_rate")?,
        tau: r.f64("tau")?,
        buffer_capacity: r.u64("buffer_capacity")? as usize,
        minibatch_size: r.u64("minibatch_size")? as usize,
        update_interval_steps: r.u64("update_interval_steps")?,
        warmup_control_steps: r.u64("warmup_control_steps")?,
        gradient_steps: r.u32("gradient_steps")?,
        hidden_size: r.u32("hidden_size")? as usize,
    };
    let policy = read_net(&mut r, "policy network")?;
    let q1 = read_net(&mut r, "q1 network")?;
    let q2 = read_net(&mut r, "q2 network")?;
    let q1_t = read_net(&mut r, "q1 target network")?;
    let q2_t = read_net(&mut r, "q2 target network")?;
    let opt_policy = read_opt(&mut r, policy.n_params(), "policy optimizer")?;
    let opt_q1 = read_opt(&mut r, q1.n_params(), "q1 optimizer")?;
    let opt_q2 = read_opt(&mut r, q2.n_params(), "q2 optimizer")?;
    r.finish()?;
    let agent = SacAgent::from_parts(
        obs_dim,
        hp,
        seed,
        word_pos,
        [policy, q1, q2, q1_t, q2_t],
        [opt_policy, opt_q1, opt_q2],
        control_steps,
        updates_done,
    )?;
    Ok((agent, set))
}

pub fn save(agent: &SacAgent, set: StateSpaceSet, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(agent, set)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(SacAgent, StateSpaceSet)> {
    let buf = std::fs::read(path)?;
    from_bytes(&buf)
}
