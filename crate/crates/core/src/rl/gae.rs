use crate::rl::RlError;

/// How a stored transition ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepFlag {
    Continue,
    /// Absorbing outcome (goal or collision); no bootstrap.
    Terminal,
    /// Timeout; bootstraps from the value of the final observation.
    Truncated(f64),
}

/// Generalised advantage estimates and value targets.
///
/// `last_value` bootstraps a trailing `Continue` step.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    flags: &[StepFlag],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), RlError> {
    let n = rewards.len();
    if values.len() != n || flags.len() != n {
        return Err(RlError::LengthMismatch(format!(
            "rewards {n}, values {}, flags {}",
            values.len(),
            flags.len()
        )));
    }
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let (next_value, carry) = match flags[t] {
            StepFlag::Continue => (if t + 1 < n { values[t + 1] } else { last_value }, 1.0),
            StepFlag::Terminal => (0.0, 0.0),
            StepFlag::Truncated(v) => (v, 0.0),
        };
        let delta = rewards[t] + gamma * next_value - values[t];
        next_adv = delta + gamma * lambda * carry * next_adv;
        advantages[t] = next_adv;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}
