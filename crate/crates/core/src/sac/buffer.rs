//! Fixed-capacity replay buffer with uniform minibatch sampling.

use std::collections::HashSet;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// One stored environment interaction at control-step granularity.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: f64,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

/// Ring buffer that evicts the oldest transition once full. Storage grows
/// on demand, so a large configured capacity costs nothing until used.
#[derive(Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    data: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay buffer capacity must be positive"));
        }
        Ok(ReplayBuffer {
            capacity,
            obs_dim,
            data: Vec::new(),
            next: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if t.obs.len() != self.obs_dim || t.next_obs.len() != self.obs_dim {
            return Err(Error::Dimension {
                what: "transition observation",
                expected: self.obs_dim,
                got: if t.obs.len() != self.obs_dim {
                    t.obs.len()
                } else {
                    t.next_obs.len()
                },
            });
        }
        if !t.action.is_finite() || !t.reward.is_finite() {
            return Err(Error::numeric("non-finite action or reward in transition"));
        }
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.next] = t;
            self.next = (self.next + 1) % self.capacity;
        }
        Ok(())
    }

    pub fn get(&self, ix: usize) -> &Transition {
        &self.data[ix]
    }

    /// Draw `k` distinct indices uniformly (Floyd's algorithm). Requires
    /// `k <= len`.
    pub fn sample_indices(&self, k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
        let n = self.data.len();
        if k > n {
            return Err(Error::run(format!(
                "cannot sample {k} transitions from a buffer of {n}"
            )));
        }
        if k == n {
            return Ok((0..n).collect());
        }
        let mut chosen = HashSet::with_capacity(k);
        let mut out = Vec::with_capacity(k);
        for j in n - k..n {
            let t = rng.gen_range(0..=j);
            if chosen.insert(t) {
                out.push(t);
            } else {
                chosen.insert(j);
                out.push(j);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use proptest::prelude::*;

    fn tr(v: f64) -> Transition {
        Transition {
            obs: vec![v, v + 1.0],
            action: 0.5,
            reward: v,
            next_obs: vec![v + 2.0, v + 3.0],
            done: false,
        }
    }

    #[test]
    fn fills_then_evicts_oldest_first() {
        let mut buf = ReplayBuffer::new(3, 2).unwrap();
        for i in 0..3 {
            buf.push(tr(i as f64)).unwrap();
        }
        assert_eq!(buf.len(), 3);
        buf.push(tr(3.0)).unwrap();
        assert_eq!(buf.len(), 3);
        // Slot 0 (the oldest) was overwritten.
        assert_eq!(buf.get(0).reward, 3.0);
        assert_eq!(buf.get(1).reward, 1.0);
        buf.push(tr(4.0)).unwrap();
        assert_eq!(buf.get(1).reward, 4.0);
        assert_eq!(buf.get(2).reward, 2.0);
    }

    #[test]
    fn rejects_bad_dimensions_and_values() {
        let mut buf = ReplayBuffer::new(8, 2).unwrap();
        let mut bad = tr(0.0);
        bad.obs = vec![1.0];
        assert!(buf.push(bad).is_err());
        let mut nanr = tr(0.0);
        nanr.reward = f64::NAN;
        assert!(buf.push(nanr).is_err());
        assert!(ReplayBuffer::new(0, 2).is_err());
        assert_eq!(buf.len(), 0);
    }

    #[test]
    fn sampling_whole_buffer_is_identity_permutation() {
        let mut buf = ReplayBuffer::new(16, 2).unwrap();
        for i in 0..5 {
            buf.push(tr(i as f64)).unwrap();
        }
        let mut rng = seeded_rng(1, "buf");
        let ix = buf.sample_indices(5, &mut rng).unwrap();
        assert_eq!(ix, vec![0, 1, 2, 3, 4]);
        assert!(buf.sample_indices(6, &mut rng).is_err());
    }

    #[test]
    fn sampled_indices_are_distinct_and_in_range() {
        let mut buf = ReplayBuffer::new(1000, 2).unwrap();
        for i in 0..1000 {
            buf.push(tr(i as f64)).unwrap();
        }
        let mut rng = seeded_rng(2, "buf");
        for _ in 0..50 {
            let ix = buf.sample_indices(64, &mut rng).unwrap();
            assert_eq!(ix.len(), 64);
            let set: HashSet<usize> = ix.iter().copied().collect();
            assert_eq!(set.len(), 64);
            assert!(ix.iter().all(|&i| i < 1000));
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let mut buf = ReplayBuffer::new(100, 2).unwrap();
        for i in 0..100 {
            buf.push(tr(i as f64)).unwrap();
        }
        let a = buf
            .sample_indices(10, &mut seeded_rng(7, "buf"))
            .unwrap();
        let b = buf
            .sample_indices(10, &mut seeded_rng(7, "buf"))
            .unwrap();
        let c = buf
            .sample_indices(10, &mut seeded_rng(8, "buf"))
            .unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn samples_are_always_distinct(n in 1usize..200, seed in 0u64..500) {
            let mut buf = ReplayBuffer::new(256, 2).unwrap();
            for i in 0..n {
                buf.push(tr(i as f64)).unwrap();
            }
            let k = n.min(1 + seed as usize % n.max(1));
            let ix = buf.sample_indices(k, &mut seeded_rng(seed, "buf-prop")).unwrap();
            let set: HashSet<usize> = ix.iter().copied().collect();
            prop_assert_eq!(set.len(), k);
            prop_assert!(ix.iter().all(|&i| i < n));
        }
    }
}
