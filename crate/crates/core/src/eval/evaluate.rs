use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, NavEnv, Observation, ObservationMode};
use crate::eval::EvalProtocol;
use crate::mix_seed;
use crate::rl::{PolicyNet, RlError};
use crate::world::{ActionCommand, ArenaMap, EpisodeState, SpawnError, Terminal};

/// Anything that can drive an evaluation episode.
pub trait EvalPolicy {
    fn act(&mut self, obs: &Observation, state: &EpisodeState) -> Result<ActionCommand, RlError>;

    /// Test seam: lets an oracle move the robot before acting. Returns true when it did.
    fn reposition(&mut self, _state: &mut EpisodeState) -> bool {
        false
    }

    fn observation_mode(&self) -> Option<ObservationMode> {
        None
    }
}

impl EvalPolicy for PolicyNet {
    fn act(&mut self, obs: &Observation, _state: &EpisodeState) -> Result<ActionCommand, RlError> {
        self.act_deterministic(obs.values())
    }

    fn observation_mode(&self) -> Option<ObservationMode> {
        Some(PolicyNet::observation_mode(self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RepeatCounts {
    pub success: usize,
    pub collision: usize,
    pub timeout: usize,
}

impl RepeatCounts {
    pub fn total(&self) -> usize {
        self.success + self.collision + self.timeout
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTrace {
    pub repeat: usize,
    pub episode: usize,
    pub seed: u64,
    pub goal: [f64; 2],
    /// `[cx, cy, size]` of each active zone.
    pub zones: Vec<[f64; 3]>,
    /// `[x, y, theta]`, starting with the spawn pose.
    pub poses: Vec<[f64; 3]>,
    pub outcome: String,
    pub episode_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub config_hash: String,
    pub map_hash: String,
    pub map: String,
    pub mode: String,
    pub zone_kind: String,
    pub zone_size: f64,
    /// Root seed of the episode spawn sequence.
    pub seed: u64,
    pub episodes_per_repeat: usize,
    pub repeats: Vec<RepeatCounts>,
    pub success_rates: Vec<f64>,
    pub mean_success_rate: f64,
    /// Sample standard deviation across repeats.
    pub std_success_rate: f64,
    pub stderr_success_rate: f64,
    pub mean_return: f64,
    pub returns: Vec<f64>,
    pub paths: Vec<PathTrace>,
}

impl EvalSummary {
    pub fn pooled(&self) -> RepeatCounts {
        self.repeats.iter().fold(RepeatCounts::default(), |acc, r| RepeatCounts {
            success: acc.success + r.success,
            collision: acc.collision + r.collision,
            timeout: acc.timeout + r.timeout,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("policy expects {policy} observations but the protocol provides {protocol}")]
    ModeMismatch { policy: &'static str, protocol: &'static str },
    #[error("invalid protocol: {0}")]
    Config(String),
    #[error("spawn: {0}")]
    Spawn(#[from] SpawnError),
    #[error(transparent)]
    Rl(#[from] RlError),
}

/// Seed of episode `episode` in repeat `repeat`; shared by every policy for paired comparisons.
pub fn episode_seed(root: u64, repeat: usize, episode: usize) -> u64 {
    mix_seed(mix_seed(root, repeat as u64), episode as u64)
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Evaluates one zone size with the deterministic policy.
pub fn evaluate_size(
    policy: &mut dyn EvalPolicy,
    map: &ArenaMap,
    env_config: &EnvConfig,
    protocol: &EvalProtocol,
    config_hash: &str,
) -> Result<EvalSummary, EvalError> {
    protocol.validate().map_err(EvalError::Config)?;
    if let Some(mode) = policy.observation_mode() {
        if mode != env_config.mode {
            return Err(EvalError::ModeMismatch { policy: mode.as_str(), protocol: env_config.mode.as_str() });
        }
    }
    let zone_size = env_config.episode.zones.first().map_or(0.0, |z| z.size);
    let mut env = NavEnv::new(map.clone(), env_config.clone(), protocol.seed);
    let mut repeats = Vec::with_capacity(protocol.repeats);
    let mut returns = Vec::new();
    let mut paths = Vec::new();
    for repeat in 0..protocol.repeats {
        let mut counts = RepeatCounts::default();
        for episode in 0..protocol.episodes {
            let seed = episode_seed(protocol.seed, repeat, episode);
            let mut obs = env.reset_with_seed(seed)?;
            let state = env.state();
            let goal = [state.goal.position.x, state.goal.position.y];
            let zones = state.zones.iter().map(|z| [z.center.x, z.center.y, z.size]).collect();
            let mut poses = vec![[state.robot.x, state.robot.y, state.robot.theta]];
            let (terminal, total) = loop {
                if policy.reposition(env.state_mut()) {
                    obs = env.observe();
                }
                let action = policy.act(&obs, env.state())?;
                let out = env.step(action);
                let r = env.state().robot;
                poses.push([r.x, r.y, r.theta]);
                if out.terminal.is_done() {
                    break (out.terminal, out.episode_return);
                }
                obs = out.observation;
            };
            match terminal {
                Terminal::Goal => counts.success += 1,
                Terminal::Collision => counts.collision += 1,
                _ => counts.timeout += 1,
            }
            returns.push(total);
            if protocol.record_paths {
                paths.push(PathTrace {
                    repeat,
                    episode,
                    seed,
                    goal,
                    zones,
                    poses,
                    outcome: terminal.as_str().to_string(),
                    episode_return: total,
                });
            }
        }
        repeats.push(counts);
    }
    let success_rates: Vec<f64> = repeats.iter().map(|c| c.success as f64 / protocol.episodes as f64).collect();
    let (mean, std) = mean_std(&success_rates);
    Ok(EvalSummary {
        config_hash: config_hash.to_string(),
        map_hash: map.hash().to_string(),
        map: map.name.clone(),
        mode: env_config.mode.as_str().to_string(),
        zone_kind: env_config.mode.zone_kind().as_str().to_string(),
        zone_size,
        seed: protocol.seed,
        episodes_per_repeat: protocol.episodes,
        stderr_success_rate: std / (repeats.len() as f64).sqrt(),
        repeats,
        success_rates,
        mean_success_rate: mean,
        std_success_rate: std,
        mean_return: returns.iter().sum::<f64>() / returns.len() as f64,
        returns,
        paths,
    })
}

/// Evaluates every zone size of the protocol.
pub fn evaluate(
    policy: &mut dyn EvalPolicy,
    map: &ArenaMap,
    base: Option<&EnvConfig>,
    protocol: &EvalProtocol,
    config_hash: &str,
) -> Result<Vec<EvalSummary>, EvalError> {
    let mode = policy
        .observation_mode()
        .or_else(|| base.map(|b| b.mode))
        .ok_or_else(|| EvalError::Config("observation mode unknown".into()))?;
    protocol
        .zone_sizes
        .iter()
        .map(|&size| evaluate_size(policy, map, &protocol.env_config(mode, map, size, base), protocol, config_hash))
        .collect()
}
