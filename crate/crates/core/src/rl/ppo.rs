use rand::seq::SliceRandom;
use rand::Rng;

use crate::nn::policy::{gaussian_entropy, gaussian_log_prob, gaussian_log_prob_grads, sample_squashed};
use crate::nn::{AdamConfig, AdamState, Activation, GradientSet, Network, NetworkSpec, ParameterSet, Tensor};
use crate::rl::{gae_advantages, Algorithm, PolicyNet, PolicyNoise, RlError, RolloutBuffer};
use crate::world::ActionCommand;

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub gamma: f64,
    pub clip: f64,
    pub gae_lambda: f64,
    pub horizon: usize,
    pub epochs: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Global gradient-norm bound; infinite disables clipping.
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
    /// Hidden widths of the actor and critic MLPs (Lidar) or of the head after the encoder (camera).
    pub hidden: Vec<usize>,
}

impl PpoConfig {
    pub fn lidar() -> Self {
        Self {
            learning_rate: 0.003,
            batch_size: 256,
            gamma: 0.99,
            clip: 0.2,
            gae_lambda: 0.95,
            horizon: 2048,
            epochs: 5,
            value_coef: 0.5,
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
            normalize_advantages: true,
            hidden: vec![64, 64],
        }
    }

    pub fn camera() -> Self {
        Self { learning_rate: 0.0003, hidden: vec![], ..Self::lidar() }
    }

    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |m: &str| Err(RlError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(self.clip > 0.0) {
            return bad("clip must be positive");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.horizon == 0 || self.horizon % self.batch_size != 0 {
            return bad("batch_size must divide horizon");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.learning_rate >= 0.0) {
            return bad("learning_rate must be non-negative");
        }
        Ok(())
    }
}

/// Builds a trunk for `obs_shape` followed by a head of `outputs` units.
pub(crate) fn build_spec(obs_shape: &[usize], hidden: &[usize], outputs: usize, hidden_act: Activation, out_act: Activation) -> Result<NetworkSpec, RlError> {
    Ok(match obs_shape {
        [n] => NetworkSpec::mlp(*n, hidden, outputs, hidden_act, out_act),
        [h, w, 3] => NetworkSpec::camera_encoder(*h, *w)?.with_head(hidden, outputs, hidden_act, out_act)?,
        other => return Err(RlError::Config(format!("unsupported observation shape {other:?}"))),
    })
}

pub(crate) fn batch_tensor(obs_shape: &[usize], obs: &[f64]) -> Result<Tensor, RlError> {
    if obs.len() != obs_shape.iter().product::<usize>() {
        return Err(RlError::ObservationShape { got: obs.len(), expected: obs_shape.to_vec() });
    }
    let mut shape = vec![1];
    shape.extend_from_slice(obs_shape);
    Ok(Tensor::from_vec(&shape, obs.to_vec())?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpoSample {
    pub action: ActionCommand,
    pub pre_squash: [f64; 2],
    /// Gaussian log-density of `pre_squash`; the squash correction cancels in ratios.
    pub log_prob: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct PpoBatch {
    pub obs: Tensor,
    pub pre_squash: Vec<[f64; 2]>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PpoDiagnostics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
    pub minibatches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoGrads {
    pub actor: GradientSet,
    pub critic: GradientSet,
    pub log_std: GradientSet,
}

impl PpoGrads {
    fn sets(&mut self) -> [&mut GradientSet; 3] {
        [&mut self.actor, &mut self.critic, &mut self.log_std]
    }

    pub fn global_norm(&self) -> f64 {
        [&self.actor, &self.critic, &self.log_std].iter().map(|g| g.global_norm().powi(2)).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct PpoAgent {
    pub config: PpoConfig,
    pub obs_shape: Vec<usize>,
    pub actor: Network,
    pub critic: Network,
    pub log_std: ParameterSet,
    actor_opt: AdamState,
    critic_opt: AdamState,
    log_std_opt: AdamState,
}

impl PpoAgent {
    pub fn new<R: Rng + ?Sized>(obs_shape: &[usize], config: PpoConfig, rng: &mut R) -> Result<Self, RlError> {
        config.validate()?;
        let gain = 2f64.sqrt();
        let actor = Network::init(build_spec(obs_shape, &config.hidden, 2, Activation::Tanh, Activation::Identity)?, gain, 0.01, rng)?;
        let critic = Network::init(build_spec(obs_shape, &config.hidden, 1, Activation::Tanh, Activation::Identity)?, gain, 1.0, rng)?;
        let log_std = ParameterSet { tensors: vec![Tensor::zeros(&[2])] };
        let adam = AdamConfig::new(config.learning_rate);
        Ok(Self {
            actor_opt: AdamState::new(actor.params(), adam),
            critic_opt: AdamState::new(critic.params(), adam),
            log_std_opt: AdamState::new(&log_std, adam),
            obs_shape: obs_shape.to_vec(),
            config,
            actor,
            critic,
            log_std,
        })
    }

    pub fn log_std(&self) -> [f64; 2] {
        let d = self.log_std.tensors[0].data();
        [d[0], d[1]]
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64, RlError> {
        Ok(self.critic.predict(&batch_tensor(&self.obs_shape, obs)?)?.data()[0])
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<PpoSample, RlError> {
        let x = batch_tensor(&self.obs_shape, obs)?;
        let mean = self.actor.predict(&x)?;
        let log_std = self.log_std();
        let s = sample_squashed(mean.data(), &log_std, rng);
        let log_prob = gaussian_log_prob(&s.pre_squash, mean.data(), &log_std);
        let value = self.critic.predict(&x)?.data()[0];
        Ok(PpoSample { action: s.action, pre_squash: s.pre_squash, log_prob, value })
    }

    pub fn policy(&self) -> PolicyNet {
        PolicyNet { algorithm: Algorithm::Ppo, actor: self.actor.clone(), noise: PolicyNoise::Gaussian { log_std: self.log_std() } }
    }

    /// Loss terms on `batch` without gradients.
    pub fn evaluate_loss(&self, batch: &PpoBatch) -> Result<PpoDiagnostics, RlError> {
        let means = self.actor.predict(&batch.obs)?;
        let values = self.critic.predict(&batch.obs)?;
        Ok(self.loss_terms(batch, &means, &values).0)
    }

    fn loss_terms(&self, batch: &PpoBatch, means: &Tensor, values: &Tensor) -> (PpoDiagnostics, Tensor, Tensor, [f64; 2]) {
        let n = batch.pre_squash.len();
        let inv_n = 1.0 / n as f64;
        let eps = self.config.clip;
        let log_std = self.log_std();
        let mut d = PpoDiagnostics { minibatches: 1, ..Default::default() };
        let mut d_mean = Tensor::zeros(means.shape());
        let mut d_log_std = [0.0; 2];
        let mut d_value = Tensor::zeros(values.shape());
        for i in 0..n {
            let mean = means.row(i);
            let u = &batch.pre_squash[i];
            let logp = gaussian_log_prob(u, mean, &log_std);
            let log_ratio = logp - batch.old_log_probs[i];
            let ratio = log_ratio.exp();
            let a = batch.advantages[i];
            let unclipped = ratio * a;
            let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * a;
            d.policy_loss -= unclipped.min(clipped) * inv_n;
            if (ratio - 1.0).abs() > eps {
                d.clip_fraction += inv_n;
            }
            d.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;
            if unclipped <= clipped {
                // d(-r A)/d logp = -r A
                let g = -unclipped * inv_n;
                let (gm, gs) = gaussian_log_prob_grads(u, mean, &log_std);
                d_mean.data_mut()[2 * i] = g * gm[0];
                d_mean.data_mut()[2 * i + 1] = g * gm[1];
                d_log_std[0] += g * gs[0];
                d_log_std[1] += g * gs[1];
            }
            let err = values.data()[i] - batch.returns[i];
            d.value_loss += err * err * inv_n;
            d_value.data_mut()[i] = self.config.value_coef * 2.0 * err * inv_n;
        }
        d.entropy = gaussian_entropy(&log_std);
        d_log_std[0] -= self.config.entropy_coef;
        d_log_std[1] -= self.config.entropy_coef;
        (d, d_mean, d_value, d_log_std)
    }

    /// Total loss terms and gradients on one minibatch.
    pub fn loss_and_grads(&self, batch: &PpoBatch) -> Result<(PpoDiagnostics, PpoGrads), RlError> {
        let (means, actor_cache) = self.actor.forward(&batch.obs)?;
        let (values, critic_cache) = self.critic.forward(&batch.obs)?;
        let (d, d_mean, d_value, d_log_std) = self.loss_terms(batch, &means, &values);
        let actor = self.actor.backward(&actor_cache, &d_mean)?.params;
        let critic = self.critic.backward(&critic_cache, &d_value)?.params;
        let log_std = ParameterSet { tensors: vec![Tensor::from_vec(&[2], d_log_std.to_vec())?] };
        Ok((d, PpoGrads { actor, critic, log_std }))
    }

    /// Clipped-surrogate update over a full rollout buffer.
    pub fn update<R: Rng + ?Sized>(&mut self, buffer: &RolloutBuffer, last_value: f64, rng: &mut R) -> Result<PpoDiagnostics, RlError> {
        if buffer.len() != self.config.horizon {
            return Err(RlError::LengthMismatch(format!("buffer holds {} steps, horizon is {}", buffer.len(), self.config.horizon)));
        }
        let cfg = self.config.clone();
        let (mut adv, returns) = gae_advantages(&buffer.rewards, &buffer.values, &buffer.flags, last_value, cfg.gamma, cfg.gae_lambda)?;
        if cfg.normalize_advantages && adv.len() > 1 {
            let n = adv.len() as f64;
            let mean = adv.iter().sum::<f64>() / n;
            let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
            adv.iter_mut().for_each(|a| *a = (*a - mean) / (std + 1e-8));
        }
        let mut order: Vec<usize> = (0..buffer.len()).collect();
        let mut total = PpoDiagnostics::default();
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(cfg.batch_size) {
                let batch = PpoBatch {
                    obs: buffer.gather_obs(chunk),
                    pre_squash: chunk.iter().map(|&i| buffer.pre_squash[i]).collect(),
                    old_log_probs: chunk.iter().map(|&i| buffer.log_probs[i]).collect(),
                    advantages: chunk.iter().map(|&i| adv[i]).collect(),
                    returns: chunk.iter().map(|&i| returns[i]).collect(),
                };
                let (d, mut grads) = self.loss_and_grads(&batch)?;
                let total_loss = d.policy_loss + cfg.value_coef * d.value_loss - cfg.entropy_coef * d.entropy;
                let grad_norm = grads.global_norm();
                if !total_loss.is_finite() || !grad_norm.is_finite() {
                    return Err(RlError::NonFinite {
                        what: "loss",
                        diagnostics: format!(
                            "policy_loss={} value_loss={} approx_kl={} grad_norm={grad_norm}",
                            d.policy_loss, d.value_loss, d.approx_kl
                        ),
                    });
                }
                if grad_norm > cfg.max_grad_norm {
                    let s = cfg.max_grad_norm / grad_norm;
                    grads.sets().into_iter().for_each(|g| g.scale(s));
                }
                self.actor_opt.step(self.actor.params_mut(), &grads.actor)?;
                self.critic_opt.step(self.critic.params_mut(), &grads.critic)?;
                self.log_std_opt.step(&mut self.log_std, &grads.log_std)?;
                total.policy_loss += d.policy_loss;
                total.value_loss += d.value_loss;
                total.entropy += d.entropy;
                total.clip_fraction += d.clip_fraction;
                total.approx_kl += d.approx_kl;
                total.grad_norm += grad_norm;
                total.minibatches += 1;
            }
        }
        let m = total.minibatches.max(1) as f64;
        Ok(PpoDiagnostics {
            policy_loss: total.policy_loss / m,
            value_loss: total.value_loss / m,
            entropy: total.entropy / m,
            clip_fraction: total.clip_fraction / m,
            approx_kl: total.approx_kl / m,
            grad_norm: total.grad_norm / m,
            minibatches: total.minibatches,
        })
    }
}
