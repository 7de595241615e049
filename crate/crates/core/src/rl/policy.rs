use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::ObservationMode;
use crate::nn::policy::{deterministic_action, sample_squashed};
use crate::nn::{Network, Tensor};
use crate::rl::{Algorithm, RlError};
use crate::world::ActionCommand;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    Stochastic,
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyNoise {
    /// PPO: the actor emits the pre-squash mean of a Gaussian with this log-std.
    Gaussian { log_std: [f64; 2] },
    /// TD3: the actor emits a unit-box action; exploration adds `Normal(0, sigma)`.
    Additive { sigma: f64 },
}

/// Actor-only policy, enough to drive an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    pub algorithm: Algorithm,
    pub actor: Network,
    pub noise: PolicyNoise,
}

impl PolicyNet {
    pub fn observation_mode(&self) -> ObservationMode {
        if self.actor.input_shape().len() == 3 {
            ObservationMode::Camera
        } else {
            ObservationMode::Lidar
        }
    }

    fn head(&self, obs: &[f64]) -> Result<Vec<f64>, RlError> {
        let shape = self.actor.input_shape();
        if obs.len() != shape.iter().product::<usize>() {
            return Err(RlError::ObservationShape { got: obs.len(), expected: shape.to_vec() });
        }
        let mut full = vec![1];
        full.extend_from_slice(shape);
        let x = Tensor::from_vec(&full, obs.to_vec())?;
        Ok(self.actor.predict(&x)?.into_data())
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], mode: ActMode, rng: &mut R) -> Result<ActionCommand, RlError> {
        let out = self.head(obs)?;
        Ok(match (self.noise, mode) {
            (PolicyNoise::Gaussian { .. }, ActMode::Deterministic) => deterministic_action(&out),
            (PolicyNoise::Gaussian { log_std }, ActMode::Stochastic) => sample_squashed(&out, &log_std, rng).action,
            (PolicyNoise::Additive { .. }, ActMode::Deterministic) => ActionCommand::from_unit([out[0], out[1]]),
            (PolicyNoise::Additive { sigma }, ActMode::Stochastic) => {
                let mut u = [0.0; 2];
                for (ui, oi) in u.iter_mut().zip(&out) {
                    let z: f64 = rng.sample(StandardNormal);
                    *ui = (oi + sigma * z).clamp(-1.0, 1.0);
                }
                ActionCommand::from_unit(u)
            }
        })
    }

    /// Deterministic action; no randomness is consumed.
    pub fn act_deterministic(&self, obs: &[f64]) -> Result<ActionCommand, RlError> {
        let out = self.head(obs)?;
        Ok(match self.noise {
            PolicyNoise::Gaussian { .. } => deterministic_action(&out),
            PolicyNoise::Additive { .. } => ActionCommand::from_unit([out[0], out[1]]),
        })
    }
}
