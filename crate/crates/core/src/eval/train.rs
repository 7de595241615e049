use std::collections::VecDeque;

use rand::{Rng, SeedableRng};

use crate::env::{EnvStep, NavEnv};
use crate::eval::{resolve_map, TrainRunConfig};
use crate::mix_seed;
use crate::rl::{
    Algorithm, CheckpointMeta, PolicyCheckpoint, PpoAgent, ReplayBuffer, RlError, RolloutBuffer, StepFlag, Td3Agent,
};
use crate::world::{ActionCommand, ArenaMap, Terminal};
use crate::SimRng;

/// Episodes in the learning-curve moving average.
pub const CURVE_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub step: u64,
    /// Mean return of the last [`CURVE_WINDOW`] finished episodes.
    pub mean_reward: f64,
    pub episodes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    /// Environment step at which the episode ended.
    pub end_step: u64,
    pub episode_return: f64,
    pub terminal: Terminal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub checkpoint: PolicyCheckpoint,
    pub curve: Vec<CurvePoint>,
    pub episodes: Vec<EpisodeRecord>,
    pub config_hash: String,
    pub map_hash: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("map: {0}")]
    Map(#[from] crate::world::MapError),
    #[error("spawn: {0}")]
    Spawn(#[from] crate::world::SpawnError),
    #[error("training diverged at step {step}: {source}")]
    Diverged { step: u64, source: RlError, last_good: Option<Box<PolicyCheckpoint>> },
    #[error(transparent)]
    Rl(#[from] RlError),
}

struct Tracker {
    window: VecDeque<f64>,
    sum: f64,
    episodes: Vec<EpisodeRecord>,
    curve: Vec<CurvePoint>,
}

impl Tracker {
    fn new() -> Self {
        Self { window: VecDeque::new(), sum: 0.0, episodes: Vec::new(), curve: Vec::new() }
    }

    fn record(&mut self, step: u64, out: &EnvStep) {
        if out.terminal.is_done() {
            let episode_return = out.episode_return;
            self.episodes.push(EpisodeRecord { end_step: step, episode_return, terminal: out.terminal });
            self.window.push_back(episode_return);
            self.sum += episode_return;
            if self.window.len() > CURVE_WINDOW {
                self.sum -= self.window.pop_front().unwrap();
            }
        }
    }

    fn point(&mut self, step: u64) {
        // re-sum to keep the average free of drift
        let mean = if self.window.is_empty() { f64::NAN } else { self.window.iter().sum::<f64>() / self.window.len() as f64 };
        self.sum = mean * self.window.len() as f64;
        self.curve.push(CurvePoint { step, mean_reward: mean, episodes: self.episodes.len() as u64 });
    }
}

pub fn train(config: &TrainRunConfig) -> Result<TrainOutput, TrainError> {
    train_with(config, &mut |_| {})
}

/// Runs a full training job; `on_checkpoint` sees every intermediate checkpoint.
pub fn train_with(config: &TrainRunConfig, on_checkpoint: &mut dyn FnMut(&PolicyCheckpoint)) -> Result<TrainOutput, TrainError> {
    config.validate().map_err(TrainError::Config)?;
    let map = resolve_map(&config.map)?;
    let config_hash = config.hash();
    let meta = |steps: u64| CheckpointMeta {
        seed: config.seed,
        steps,
        config_hash: config_hash.clone(),
        map_hash: map.hash().to_string(),
    };
    let mut init_rng = SimRng::seed_from_u64(mix_seed(config.seed, 1));
    let mut act_rng = SimRng::seed_from_u64(mix_seed(config.seed, 2));
    let mut update_rng = SimRng::seed_from_u64(mix_seed(config.seed, 3));
    let env = NavEnv::new(map.clone(), config.env_config(), mix_seed(config.seed, 4));
    log::info!(
        "training {} {} zone {} for {} steps (config {})",
        config.algorithm.as_str(),
        config.mode.as_str(),
        config.zone_size,
        config.total_steps,
        &config_hash[..12]
    );
    match config.algorithm {
        Algorithm::Ppo => {
            let agent = PpoAgent::new(&config.env_config().observation_shape(), config.ppo.clone(), &mut init_rng)?;
            train_ppo(config, env, agent, &mut act_rng, &mut update_rng, &meta, on_checkpoint, &map, &config_hash)
        }
        Algorithm::Td3 => {
            let agent = Td3Agent::new(&config.env_config().observation_shape(), config.td3.clone(), &mut init_rng)?;
            train_td3(config, env, agent, &mut act_rng, &mut update_rng, &meta, on_checkpoint, &map, &config_hash)
        }
    }
}

fn progress(step: u64, total: u64, tracker: &Tracker) {
    if let Some(p) = tracker.curve.last() {
        log::info!("step {step}/{total}: mean episode reward {:.3} over {} episodes", p.mean_reward, p.episodes);
    }
}

#[allow(clippy::too_many_arguments)]
fn train_ppo(
    config: &TrainRunConfig,
    mut env: NavEnv,
    mut agent: PpoAgent,
    act_rng: &mut SimRng,
    update_rng: &mut SimRng,
    meta: &dyn Fn(u64) -> CheckpointMeta,
    on_checkpoint: &mut dyn FnMut(&PolicyCheckpoint),
    map: &ArenaMap,
    config_hash: &str,
) -> Result<TrainOutput, TrainError> {
    let mut buffer = RolloutBuffer::new(&env.config().observation_shape(), agent.config.horizon);
    let mut tracker = Tracker::new();
    let mut last_good: Option<PolicyCheckpoint> = None;
    let mut obs = env.reset()?;
    for step in 1..=config.total_steps {
        let sample = agent.act(obs.values(), act_rng)?;
        let out = env.step(sample.action);
        let flag = match out.terminal {
            Terminal::None => StepFlag::Continue,
            Terminal::Goal | Terminal::Collision => StepFlag::Terminal,
            Terminal::Timeout => StepFlag::Truncated(agent.value(out.observation.values())?),
        };
        buffer.push(obs.values(), sample.pre_squash, sample.log_prob, out.reward, sample.value, flag);
        tracker.record(step, &out);
        obs = if out.terminal.is_done() { env.reset()? } else { out.observation };

        if buffer.is_full() {
            let last_value = agent.value(obs.values())?;
            match agent.update(&buffer, last_value, update_rng) {
                Ok(d) => log::debug!(
                    "step {step}: policy_loss {:.4} value_loss {:.4} clip_fraction {:.3} approx_kl {:.4} log_std {:?}",
                    d.policy_loss,
                    d.value_loss,
                    d.clip_fraction,
                    d.approx_kl,
                    agent.log_std()
                ),
                Err(source) => return Err(TrainError::Diverged { step, source, last_good: last_good.map(Box::new) }),
            }
            buffer.clear();
        }
        if step % config.curve_interval == 0 {
            tracker.point(step);
            if step % (config.curve_interval * 25) == 0 {
                progress(step, config.total_steps, &tracker);
            }
        }
        if config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0 {
            let ck = PolicyCheckpoint::new(meta(step), agent.policy());
            on_checkpoint(&ck);
            last_good = Some(ck);
        }
    }
    Ok(TrainOutput {
        checkpoint: PolicyCheckpoint::new(meta(config.total_steps), agent.policy()),
        curve: tracker.curve,
        episodes: tracker.episodes,
        config_hash: config_hash.to_string(),
        map_hash: map.hash().to_string(),
    })
}

#[allow(clippy::too_many_arguments)]
fn train_td3(
    config: &TrainRunConfig,
    mut env: NavEnv,
    mut agent: Td3Agent,
    act_rng: &mut SimRng,
    update_rng: &mut SimRng,
    meta: &dyn Fn(u64) -> CheckpointMeta,
    on_checkpoint: &mut dyn FnMut(&PolicyCheckpoint),
    map: &ArenaMap,
    config_hash: &str,
) -> Result<TrainOutput, TrainError> {
    let cfg = agent.config.clone();
    let mut replay = ReplayBuffer::new(&env.config().observation_shape(), cfg.replay_capacity);
    let mut tracker = Tracker::new();
    let mut last_good: Option<PolicyCheckpoint> = None;
    let mut obs = env.reset()?;
    for step in 1..=config.total_steps {
        let unit = if step <= cfg.learning_starts {
            [act_rng.random_range(-1.0..=1.0), act_rng.random_range(-1.0..=1.0)]
        } else {
            agent.explore(obs.values(), act_rng)?
        };
        let out = env.step(ActionCommand::from_unit(unit));
        let done = matches!(out.terminal, Terminal::Goal | Terminal::Collision);
        replay.push(obs.values(), unit, out.reward, out.observation.values(), done);
        tracker.record(step, &out);
        obs = if out.terminal.is_done() { env.reset()? } else { out.observation };

        if step >= cfg.learning_starts && step % cfg.train_freq == 0 && replay.len() >= cfg.batch_size.min(cfg.replay_capacity) {
            for _ in 0..cfg.gradient_steps {
                if let Err(source) = agent.update(&replay, update_rng) {
                    return Err(TrainError::Diverged { step, source, last_good: last_good.map(Box::new) });
                }
            }
        }
        if step % config.curve_interval == 0 {
            tracker.point(step);
            if step % (config.curve_interval * 25) == 0 {
                progress(step, config.total_steps, &tracker);
            }
        }
        if config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0 {
            let ck = PolicyCheckpoint::new(meta(step), agent.policy());
            on_checkpoint(&ck);
            last_good = Some(ck);
        }
    }
    Ok(TrainOutput {
        checkpoint: PolicyCheckpoint::new(meta(config.total_steps), agent.policy()),
        curve: tracker.curve,
        episodes: tracker.episodes,
        config_hash: config_hash.to_string(),
        map_hash: map.hash().to_string(),
    })
}
