//! Gym-style environment wrapping the arena and the sensor pipeline.

use crate::mix_seed;
use crate::sensors::{
    assemble_lidar_obs, blackout_camera, goal_polar, perturb_lidar, raycast, render_fpv, CameraConfig, CameraFrame,
    LidarConfig, ObservationVector, PerturbationModel, LIDAR_OBS_DIM,
};
use crate::world::{spawn_episode, ActionCommand, ArenaMap, EpisodeConfig, EpisodeState, SpawnError, Terminal, ZoneKind};
use crate::SimRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObservationMode {
    Lidar,
    Camera,
}

impl ObservationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObservationMode::Lidar => "lidar",
            ObservationMode::Camera => "camera",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lidar" => Some(Self::Lidar),
            "camera" => Some(Self::Camera),
            _ => None,
        }
    }

    /// The attack that applies to this sensor.
    pub fn zone_kind(&self) -> ZoneKind {
        match self {
            ObservationMode::Lidar => ZoneKind::LidarGauss,
            ObservationMode::Camera => ZoneKind::CameraBlackout,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Lidar(ObservationVector),
    Camera(CameraFrame),
}

impl Observation {
    pub fn values(&self) -> &[f64] {
        match self {
            Observation::Lidar(v) => v.values(),
            Observation::Camera(f) => &f.pixels,
        }
    }

    /// Per-sample tensor shape: `[24]` or `[height, width, 3]`.
    pub fn shape(&self) -> Vec<usize> {
        match self {
            Observation::Lidar(_) => vec![LIDAR_OBS_DIM],
            Observation::Camera(f) => vec![f.height, f.width, 3],
        }
    }

    pub fn mode(&self) -> ObservationMode {
        match self {
            Observation::Lidar(_) => ObservationMode::Lidar,
            Observation::Camera(_) => ObservationMode::Camera,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub episode: EpisodeConfig,
    pub mode: ObservationMode,
    pub lidar: LidarConfig,
    pub perturbation: PerturbationModel,
    pub camera: CameraConfig,
}

impl EnvConfig {
    pub fn new(mode: ObservationMode) -> Self {
        Self {
            episode: EpisodeConfig::default(),
            mode,
            lidar: LidarConfig::default(),
            perturbation: PerturbationModel::default(),
            camera: CameraConfig::default(),
        }
    }

    pub fn observation_shape(&self) -> Vec<usize> {
        match self.mode {
            ObservationMode::Lidar => vec![LIDAR_OBS_DIM],
            ObservationMode::Camera => vec![self.camera.height, self.camera.width, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub observation: Observation,
    pub reward: f64,
    pub terminal: Terminal,
    /// Exact return of the episode up to and including this step.
    pub episode_return: f64,
}

/// One environment instance with its own seed stream.
#[derive(Debug, Clone)]
pub struct NavEnv {
    map: ArenaMap,
    config: EnvConfig,
    state: Option<EpisodeState>,
    seeder: SimRng,
}

impl NavEnv {
    /// `stream_seed` drives the sequence of episode seeds drawn by [`NavEnv::reset`].
    pub fn new(map: ArenaMap, config: EnvConfig, stream_seed: u64) -> Self {
        Self { map, config, state: None, seeder: SimRng::seed_from_u64(mix_seed(stream_seed, 0x5eed)) }
    }

    pub fn map(&self) -> &ArenaMap {
        &self.map
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    /// Current episode; panics before the first reset.
    pub fn state(&self) -> &EpisodeState {
        self.state.as_ref().expect("environment not reset")
    }

    pub fn state_mut(&mut self) -> &mut EpisodeState {
        self.state.as_mut().expect("environment not reset")
    }

    pub fn reset(&mut self) -> Result<Observation, SpawnError> {
        let seed = self.seeder.random::<u64>();
        self.reset_with_seed(seed)
    }

    pub fn reset_with_seed(&mut self, seed: u64) -> Result<Observation, SpawnError> {
        self.state = Some(spawn_episode(&self.map, &self.config.episode, seed)?);
        Ok(self.observe())
    }

    pub fn step(&mut self, action: ActionCommand) -> EnvStep {
        let state = self.state.as_mut().expect("environment not reset");
        let (reward, terminal) = state.advance(action, &self.map, &self.config.episode);
        let episode_return = state.episode_return();
        let observation = self.observe();
        EnvStep { observation, reward, terminal, episode_return }
    }

    /// Senses the current state; Lidar noise draws come from the episode stream.
    pub fn observe(&mut self) -> Observation {
        let map = &self.map;
        let config = &self.config;
        let state = self.state.as_mut().expect("environment not reset");
        match config.mode {
            ObservationMode::Lidar => {
                let clean = raycast(&state.robot, map, &config.lidar);
                let active = state.in_zone_of(ZoneKind::LidarGauss);
                let scan = perturb_lidar(&clean, active, &config.perturbation, &mut state.rng);
                let polar = goal_polar(&state.robot, state.goal.position);
                Observation::Lidar(assemble_lidar_obs(&scan, polar, state.prev_action, map.diagonal()))
            }
            ObservationMode::Camera => {
                let frame = render_fpv(&state.robot, map, &state.goal, &config.camera);
                let active = state.in_zone_of(ZoneKind::CameraBlackout);
                Observation::Camera(blackout_camera(&frame, active))
            }
        }
    }
}
