//! Tanh-squashed diagonal Gaussian over the two-dimensional action box.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::world::ActionCommand;

pub const ACTION_DIM: usize = 2;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquashedSample {
    /// Gaussian draw before the tanh.
    pub pre_squash: [f64; ACTION_DIM],
    pub action: ActionCommand,
    /// Log-density of `action` on the command ranges, squash correction included.
    pub log_prob: f64,
}

/// Diagonal Gaussian log-density of `u`.
pub fn gaussian_log_prob(u: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    u.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((u, m), s)| {
            let z = (u - m) / s.exp();
            -0.5 * z * z - s - 0.5 * LN_2PI
        })
        .sum()
}

/// Gradients of [`gaussian_log_prob`] with respect to the mean and the log-std.
pub fn gaussian_log_prob_grads(u: &[f64], mean: &[f64], log_std: &[f64]) -> ([f64; ACTION_DIM], [f64; ACTION_DIM]) {
    let mut d_mean = [0.0; ACTION_DIM];
    let mut d_log_std = [0.0; ACTION_DIM];
    for i in 0..ACTION_DIM {
        let inv_var = (-2.0 * log_std[i]).exp();
        d_mean[i] = (u[i] - mean[i]) * inv_var;
        d_log_std[i] = (u[i] - mean[i]).powi(2) * inv_var - 1.0;
    }
    (d_mean, d_log_std)
}

/// Entropy of the pre-squash Gaussian.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|s| s + 0.5 * (1.0 + LN_2PI)).sum()
}

fn log_one_minus_tanh_sq(u: f64) -> f64 {
    // log(1 - tanh(u)^2) = 2 (ln 2 - u - softplus(-2u))
    let x = -2.0 * u;
    let softplus = if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    2.0 * (std::f64::consts::LN_2 - u - softplus)
}

/// `sum log |d action / d u|`; the linear channel carries an extra factor 1/2.
pub fn squash_log_det(u: &[f64]) -> f64 {
    log_one_minus_tanh_sq(u[0]) - std::f64::consts::LN_2 + log_one_minus_tanh_sq(u[1])
}

pub fn squash(u: &[f64]) -> ActionCommand {
    ActionCommand::from_unit([u[0].tanh(), u[1].tanh()])
}

/// Squashed mean; uses no randomness.
pub fn deterministic_action(mean: &[f64]) -> ActionCommand {
    squash(mean)
}

pub fn sample_squashed<R: Rng + ?Sized>(mean: &[f64], log_std: &[f64], rng: &mut R) -> SquashedSample {
    let mut u = [0.0; ACTION_DIM];
    for i in 0..ACTION_DIM {
        let z: f64 = rng.sample(StandardNormal);
        u[i] = mean[i] + log_std[i].exp() * z;
    }
    let log_prob = gaussian_log_prob(&u, mean, log_std) - squash_log_det(&u);
    SquashedSample { pre_squash: u, action: squash(&u), log_prob }
}

/// Log-density of an interior action on `[0, 1] x [-1, 1]`.
pub fn action_log_density(mean: &[f64], log_std: &[f64], action: ActionCommand) -> f64 {
    let unit = action.to_unit();
    let u = [unit[0].atanh(), unit[1].atanh()];
    gaussian_log_prob(&u, mean, log_std) - squash_log_det(&u)
}
