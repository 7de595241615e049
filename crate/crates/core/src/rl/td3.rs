use rand::Rng;
use rand_distr::StandardNormal;

use crate::nn::{AdamConfig, AdamState, Activation, ForwardCache, GradientSet, Network, Tensor};
use crate::rl::ppo::{batch_tensor, build_spec};
use crate::rl::{Algorithm, PolicyNet, PolicyNoise, ReplayBatch, ReplayBuffer, RlError};

#[derive(Debug, Clone, PartialEq)]
pub struct Td3Config {
    pub learning_rate: f64,
    pub tau: f64,
    pub learning_starts: u64,
    pub batch_size: usize,
    pub gamma: f64,
    pub exploration_noise: f64,
    pub policy_delay: u64,
    pub target_noise: f64,
    pub target_noise_clip: f64,
    pub replay_capacity: usize,
    pub hidden: Vec<usize>,
    /// Environment steps between training rounds.
    pub train_freq: u64,
    /// Gradient steps per training round.
    pub gradient_steps: u64,
}

impl Td3Config {
    pub fn lidar() -> Self {
        Self {
            learning_rate: 0.0003,
            tau: 0.005,
            learning_starts: 5000,
            batch_size: 128,
            gamma: 0.99,
            exploration_noise: 0.3,
            policy_delay: 2,
            target_noise: 0.2,
            target_noise_clip: 0.5,
            replay_capacity: 1_000_000,
            hidden: vec![64, 64],
            train_freq: 1,
            gradient_steps: 1,
        }
    }

    pub fn camera() -> Self {
        Self { batch_size: 256, ..Self::lidar() }
    }

    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |m: &str| Err(RlError::Config(m.to_string()));
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if self.batch_size == 0 || self.policy_delay == 0 || self.train_freq == 0 || self.replay_capacity == 0 {
            return bad("batch_size, policy_delay, train_freq and replay_capacity must be positive");
        }
        if !(self.learning_rate >= 0.0) || !(self.exploration_noise >= 0.0) || !(self.target_noise >= 0.0) {
            return bad("rates and noise scales must be non-negative");
        }
        Ok(())
    }
}

/// `r + gamma (1 - done) min(q1, q2)`.
pub fn td3_target(reward: f64, done: bool, q1_next: f64, q2_next: f64, gamma: f64) -> f64 {
    let bootstrap = if done { 0.0 } else { q1_next.min(q2_next) };
    reward + gamma * bootstrap
}

/// Target policy smoothing for one action coordinate in the unit box.
pub fn smooth_target_action(mu: f64, noise: f64, noise_clip: f64) -> f64 {
    (mu + noise.clamp(-noise_clip, noise_clip)).clamp(-1.0, 1.0)
}

/// Q(s, a) with an optional image encoder in front of the state input.
#[derive(Debug, Clone)]
struct Critic {
    encoder: Option<Network>,
    head: Network,
}

struct CriticCache {
    encoder: Option<ForwardCache>,
    head: ForwardCache,
    feature_width: usize,
}

fn concat_actions(features: &Tensor, actions: &[[f64; 2]]) -> Tensor {
    let n = features.batch();
    let width = features.len() / n.max(1);
    let mut data = Vec::with_capacity(n * (width + 2));
    for (i, a) in actions.iter().enumerate() {
        data.extend_from_slice(features.row(i));
        data.extend_from_slice(a);
    }
    Tensor::from_vec(&[n, width + 2], data).expect("concatenated width")
}

impl Critic {
    fn new<R: Rng + ?Sized>(obs_shape: &[usize], hidden: &[usize], rng: &mut R) -> Result<Self, RlError> {
        let gain = 2f64.sqrt();
        let (encoder, width) = if obs_shape.len() == 3 {
            let spec = crate::nn::NetworkSpec::camera_encoder(obs_shape[0], obs_shape[1])?;
            let width = spec.output_shape()?[0];
            (Some(Network::init(spec, gain, gain, rng)?), width)
        } else {
            (None, obs_shape.iter().product())
        };
        let head = Network::init(build_spec(&[width + 2], hidden, 1, Activation::Relu, Activation::Identity)?, gain, 1.0, rng)?;
        Ok(Self { encoder, head })
    }

    fn features(&self, obs: &Tensor) -> Result<Tensor, RlError> {
        Ok(match &self.encoder {
            Some(e) => e.predict(obs)?,
            None => obs.clone().reshape(&[obs.batch(), obs.len() / obs.batch().max(1)])?,
        })
    }

    fn predict(&self, obs: &Tensor, actions: &[[f64; 2]]) -> Result<Vec<f64>, RlError> {
        let x = concat_actions(&self.features(obs)?, actions);
        Ok(self.head.predict(&x)?.into_data())
    }

    fn forward(&self, obs: &Tensor, actions: &[[f64; 2]]) -> Result<(Vec<f64>, CriticCache), RlError> {
        let (features, encoder) = match &self.encoder {
            Some(e) => {
                let (f, c) = e.forward(obs)?;
                (f, Some(c))
            }
            None => (self.features(obs)?, None),
        };
        let feature_width = features.len() / features.batch().max(1);
        let (q, head) = self.head.forward(&concat_actions(&features, actions))?;
        Ok((q.into_data(), CriticCache { encoder, head, feature_width }))
    }

    /// Head gradients, encoder gradients and the gradient with respect to the actions.
    fn backward(&self, cache: &CriticCache, dq: &[f64]) -> Result<(GradientSet, Option<GradientSet>, Vec<[f64; 2]>), RlError> {
        let g = self.head.backward(&cache.head, &Tensor::from_vec(&[dq.len(), 1], dq.to_vec())?)?;
        let w = cache.feature_width;
        let mut d_actions = Vec::with_capacity(dq.len());
        let mut d_features = Vec::with_capacity(dq.len() * w);
        for i in 0..dq.len() {
            let row = g.input.row(i);
            d_features.extend_from_slice(&row[..w]);
            d_actions.push([row[w], row[w + 1]]);
        }
        let encoder = match (&self.encoder, &cache.encoder) {
            (Some(e), Some(c)) => Some(e.backward(c, &Tensor::from_vec(&[dq.len(), w], d_features)?)?.params),
            _ => None,
        };
        Ok((g.params, encoder, d_actions))
    }

    fn polyak_from(&mut self, source: &Critic, tau: f64) {
        self.head.params_mut().polyak_from(source.head.params(), tau);
        if let (Some(t), Some(s)) = (&mut self.encoder, &source.encoder) {
            t.params_mut().polyak_from(s.params(), tau);
        }
    }
}

#[derive(Debug, Clone)]
struct CriticOpt {
    head: AdamState,
    encoder: Option<AdamState>,
}

impl CriticOpt {
    fn new(c: &Critic, cfg: AdamConfig) -> Self {
        Self { head: AdamState::new(c.head.params(), cfg), encoder: c.encoder.as_ref().map(|e| AdamState::new(e.params(), cfg)) }
    }

    fn step(&mut self, c: &mut Critic, head: &GradientSet, encoder: Option<&GradientSet>) -> Result<(), RlError> {
        self.head.step(c.head.params_mut(), head)?;
        if let (Some(opt), Some(net), Some(g)) = (&mut self.encoder, &mut c.encoder, encoder) {
            opt.step(net.params_mut(), g)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Td3Targets {
    pub next_actions: Vec<[f64; 2]>,
    pub q1_next: Vec<f64>,
    pub q2_next: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Td3Diagnostics {
    pub critic_loss: f64,
    pub actor_loss: Option<f64>,
    /// Every target in the batch was at most the larger target critic value.
    pub twin_min_held: bool,
}

#[derive(Debug, Clone)]
pub struct Td3Agent {
    pub config: Td3Config,
    pub obs_shape: Vec<usize>,
    pub actor: Network,
    actor_target: Network,
    critics: [Critic; 2],
    critic_targets: [Critic; 2],
    actor_opt: AdamState,
    critic_opts: [CriticOpt; 2],
    updates: u64,
}

impl Td3Agent {
    pub fn new<R: Rng + ?Sized>(obs_shape: &[usize], config: Td3Config, rng: &mut R) -> Result<Self, RlError> {
        config.validate()?;
        let actor = Network::init(build_spec(obs_shape, &config.hidden, 2, Activation::Relu, Activation::Tanh)?, 2f64.sqrt(), 0.01, rng)?;
        let critics = [Critic::new(obs_shape, &config.hidden, rng)?, Critic::new(obs_shape, &config.hidden, rng)?];
        let adam = AdamConfig::new(config.learning_rate);
        Ok(Self {
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor_opt: AdamState::new(actor.params(), adam),
            critic_opts: [CriticOpt::new(&critics[0], adam), CriticOpt::new(&critics[1], adam)],
            obs_shape: obs_shape.to_vec(),
            config,
            actor,
            critics,
            updates: 0,
        })
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn policy(&self) -> PolicyNet {
        PolicyNet {
            algorithm: Algorithm::Td3,
            actor: self.actor.clone(),
            noise: PolicyNoise::Additive { sigma: self.config.exploration_noise },
        }
    }

    /// Exploratory unit-box action: `clamp(mu + Normal(0, sigma))`.
    pub fn explore<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<[f64; 2], RlError> {
        let mu = self.actor.predict(&batch_tensor(&self.obs_shape, obs)?)?;
        let mut u = [0.0; 2];
        for (ui, m) in u.iter_mut().zip(mu.data()) {
            let z: f64 = rng.sample(StandardNormal);
            *ui = (m + self.config.exploration_noise * z).clamp(-1.0, 1.0);
        }
        Ok(u)
    }

    /// Online critic values for one observation and unit-box action.
    pub fn q_values(&self, obs: &[f64], action: [f64; 2]) -> Result<(f64, f64), RlError> {
        let x = batch_tensor(&self.obs_shape, obs)?;
        Ok((self.critics[0].predict(&x, &[action])?[0], self.critics[1].predict(&x, &[action])?[0]))
    }

    pub fn actor_target_params(&self) -> &crate::nn::ParameterSet {
        self.actor_target.params()
    }

    /// Smoothed target actions and twin-min critic targets.
    pub fn compute_targets<R: Rng + ?Sized>(&self, batch: &ReplayBatch, rng: &mut R) -> Result<Td3Targets, RlError> {
        let mu = self.actor_target.predict(&batch.next_obs)?;
        let next_actions: Vec<[f64; 2]> = (0..batch.rewards.len())
            .map(|i| {
                let row = mu.row(i);
                let mut a = [0.0; 2];
                for k in 0..2 {
                    let z: f64 = rng.sample(StandardNormal);
                    a[k] = smooth_target_action(row[k], self.config.target_noise * z, self.config.target_noise_clip);
                }
                a
            })
            .collect();
        let q1_next = self.critic_targets[0].predict(&batch.next_obs, &next_actions)?;
        let q2_next = self.critic_targets[1].predict(&batch.next_obs, &next_actions)?;
        let y = (0..batch.rewards.len())
            .map(|i| td3_target(batch.rewards[i], batch.dones[i], q1_next[i], q2_next[i], self.config.gamma))
            .collect();
        Ok(Td3Targets { next_actions, q1_next, q2_next, y })
    }

    /// One gradient step from a sampled batch.
    pub fn update<R: Rng + ?Sized>(&mut self, replay: &ReplayBuffer, rng: &mut R) -> Result<Td3Diagnostics, RlError> {
        if replay.len() < self.config.batch_size.min(replay.capacity()) {
            return Err(RlError::BufferUnderfull { have: replay.len(), need: self.config.batch_size });
        }
        let batch = replay.sample(self.config.batch_size, rng)?;
        self.update_on_batch(&batch, rng)
    }

    pub fn update_on_batch<R: Rng + ?Sized>(&mut self, batch: &ReplayBatch, rng: &mut R) -> Result<Td3Diagnostics, RlError> {
        let n = batch.rewards.len();
        let inv_n = 1.0 / n as f64;
        let targets = self.compute_targets(batch, rng)?;
        let gamma = self.config.gamma;
        let twin_min_held = (0..n).all(|i| {
            let bound = batch.rewards[i] + if batch.dones[i] { 0.0 } else { gamma * targets.q1_next[i].max(targets.q2_next[i]) };
            targets.y[i] <= bound
        });

        let mut critic_loss = 0.0;
        for k in 0..2 {
            let (q, cache) = self.critics[k].forward(&batch.obs, &batch.actions)?;
            let dq: Vec<f64> = q.iter().zip(&targets.y).map(|(q, y)| 2.0 * (q - y) * inv_n).collect();
            critic_loss += q.iter().zip(&targets.y).map(|(q, y)| (q - y).powi(2)).sum::<f64>() * inv_n;
            let (head, encoder, _) = self.critics[k].backward(&cache, &dq)?;
            if !critic_loss.is_finite() {
                return Err(RlError::NonFinite { what: "critic loss", diagnostics: format!("critic {k} loss {critic_loss}") });
            }
            self.critic_opts[k].step(&mut self.critics[k], &head, encoder.as_ref())?;
        }

        self.updates += 1;
        let mut actor_loss = None;
        if self.updates % self.config.policy_delay == 0 {
            let (mu, actor_cache) = self.actor.forward(&batch.obs)?;
            let actions: Vec<[f64; 2]> = (0..n).map(|i| [mu.row(i)[0], mu.row(i)[1]]).collect();
            let (q, cache) = self.critics[0].forward(&batch.obs, &actions)?;
            let loss = -q.iter().sum::<f64>() * inv_n;
            if !loss.is_finite() {
                return Err(RlError::NonFinite { what: "actor loss", diagnostics: format!("actor loss {loss}") });
            }
            let (_, _, d_actions) = self.critics[0].backward(&cache, &vec![-inv_n; n])?;
            let d_mu = Tensor::from_vec(mu.shape(), d_actions.iter().flat_map(|a| a.iter().copied()).collect())?;
            let grads = self.actor.backward(&actor_cache, &d_mu)?.params;
            self.actor_opt.step(self.actor.params_mut(), &grads)?;
            actor_loss = Some(loss);
            let tau = self.config.tau;
            self.actor_target.params_mut().polyak_from(self.actor.params(), tau);
            for k in 0..2 {
                let source = self.critics[k].clone();
                self.critic_targets[k].polyak_from(&source, tau);
            }
        }
        Ok(Td3Diagnostics { critic_loss, actor_loss, twin_min_held })
    }
}
