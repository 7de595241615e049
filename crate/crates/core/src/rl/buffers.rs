use rand::Rng;

use crate::nn::Tensor;
use crate::rl::{RlError, StepFlag};

/// Fixed-horizon on-policy storage.
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    pub obs_shape: Vec<usize>,
    pub horizon: usize,
    pub observations: Vec<f64>,
    pub pre_squash: Vec<[f64; 2]>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub flags: Vec<StepFlag>,
}

impl RolloutBuffer {
    pub fn new(obs_shape: &[usize], horizon: usize) -> Self {
        Self {
            obs_shape: obs_shape.to_vec(),
            horizon,
            observations: Vec::new(),
            pre_squash: Vec::new(),
            log_probs: Vec::new(),
            rewards: Vec::new(),
            values: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub fn obs_len(&self) -> usize {
        self.obs_shape.iter().product()
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() >= self.horizon
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(&mut self, obs: &[f64], pre_squash: [f64; 2], log_prob: f64, reward: f64, value: f64, flag: StepFlag) {
        assert_eq!(obs.len(), self.obs_len(), "observation size");
        assert!(!self.is_full(), "rollout buffer overflow");
        self.observations.extend_from_slice(obs);
        self.pre_squash.push(pre_squash);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.values.push(value);
        self.flags.push(flag);
    }

    pub fn clear(&mut self) {
        self.observations.clear();
        self.pre_squash.clear();
        self.log_probs.clear();
        self.rewards.clear();
        self.values.clear();
        self.flags.clear();
    }

    /// Observations at `indices` as a `[n, ...obs_shape]` batch.
    pub fn gather_obs(&self, indices: &[usize]) -> Tensor {
        let per = self.obs_len();
        Tensor::stack(&self.obs_shape, indices.iter().map(|&i| &self.observations[i * per..(i + 1) * per]))
            .expect("buffer rows have the observation size")
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBatch {
    pub obs: Tensor,
    pub actions: Vec<[f64; 2]>,
    pub rewards: Vec<f64>,
    pub next_obs: Tensor,
    /// True only for absorbing outcomes; timeouts stay bootstrapped.
    pub dones: Vec<bool>,
}

/// Ring buffer of transitions; observations are stored as `f32`.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_shape: Vec<usize>,
    obs: Vec<f32>,
    next_obs: Vec<f32>,
    actions: Vec<[f64; 2]>,
    rewards: Vec<f64>,
    dones: Vec<bool>,
    head: usize,
    len: usize,
}

impl ReplayBuffer {
    pub fn new(obs_shape: &[usize], capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            obs_shape: obs_shape.to_vec(),
            obs: Vec::new(),
            next_obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            head: 0,
            len: 0,
        }
    }

    fn obs_len(&self) -> usize {
        self.obs_shape.iter().product()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, obs: &[f64], action: [f64; 2], reward: f64, next_obs: &[f64], done: bool) {
        let per = self.obs_len();
        assert!(obs.len() == per && next_obs.len() == per, "observation size");
        if self.len < self.capacity {
            self.obs.extend(obs.iter().map(|&v| v as f32));
            self.next_obs.extend(next_obs.iter().map(|&v| v as f32));
            self.actions.push(action);
            self.rewards.push(reward);
            self.dones.push(done);
            self.len += 1;
        } else {
            let i = self.head;
            self.obs[i * per..(i + 1) * per].iter_mut().zip(obs).for_each(|(d, &s)| *d = s as f32);
            self.next_obs[i * per..(i + 1) * per].iter_mut().zip(next_obs).for_each(|(d, &s)| *d = s as f32);
            self.actions[i] = action;
            self.rewards[i] = reward;
            self.dones[i] = done;
        }
        self.head = (self.head + 1) % self.capacity;
    }

    /// Uniform indices with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>, RlError> {
        if self.len == 0 || batch == 0 {
            return Err(RlError::BufferUnderfull { have: self.len, need: batch.max(1) });
        }
        Ok((0..batch).map(|_| rng.random_range(0..self.len)).collect())
    }

    pub fn gather(&self, indices: &[usize]) -> ReplayBatch {
        let per = self.obs_len();
        let mut shape = vec![indices.len()];
        shape.extend_from_slice(&self.obs_shape);
        let widen = |src: &[f32]| -> Tensor {
            let mut data = Vec::with_capacity(indices.len() * per);
            for &i in indices {
                data.extend(src[i * per..(i + 1) * per].iter().map(|&v| v as f64));
            }
            Tensor::from_vec(&shape, data).expect("replay rows have the observation size")
        };
        ReplayBatch {
            obs: widen(&self.obs),
            actions: indices.iter().map(|&i| self.actions[i]).collect(),
            rewards: indices.iter().map(|&i| self.rewards[i]).collect(),
            next_obs: widen(&self.next_obs),
            dones: indices.iter().map(|&i| self.dones[i]).collect(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<ReplayBatch, RlError> {
        Ok(self.gather(&self.sample_indices(batch, rng)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn ring_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(&[1], 3);
        for i in 0..5 {
            buf.push(&[i as f64], [0.0, 0.0], i as f64, &[i as f64 + 1.0], false);
        }
        assert_eq!(buf.len(), 3);
        let batch = buf.gather(&[0, 1, 2]);
        assert_eq!(batch.rewards, vec![3.0, 4.0, 2.0]);
        assert_eq!(batch.obs.data(), &[3.0, 4.0, 2.0]);
    }

    #[test]
    fn empty_buffer_refuses_to_sample() {
        let buf = ReplayBuffer::new(&[2], 10);
        let mut rng = crate::SimRng::seed_from_u64(0);
        assert!(matches!(buf.sample(4, &mut rng), Err(RlError::BufferUnderfull { .. })));
    }
}
