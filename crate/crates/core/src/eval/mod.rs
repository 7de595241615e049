//! Training runs, the evaluation protocol, regime sweeps and learning-rate sweeps.

mod evaluate;
mod runs;
mod sweep;
mod train;

pub use evaluate::{evaluate, evaluate_size, episode_seed, EvalError, EvalPolicy, EvalSummary, PathTrace, RepeatCounts};
pub use runs::{write_atomic, RunDir, RunError, RunStore, StoredRun};
pub use sweep::{
    best_learning_rate, final_mean_reward, lr_sweep, regime_sweep, train_or_resume, LrSweepReport, LrSweepRun, MatrixCell,
    RegimeMatrix, SweepError, SweepPlan,
};
pub use train::{train, train_with, CurvePoint, EpisodeRecord, TrainError, TrainOutput};

use crate::env::{EnvConfig, ObservationMode};
use crate::rl::{Algorithm, PpoConfig, Td3Config};
use crate::sensors::PerturbationModel;
use crate::world::{ArenaMap, MapError, Placement, ZoneSpec};

/// Resolves `default`, `empty` or a path to a map file.
pub fn resolve_map(reference: &str) -> Result<ArenaMap, MapError> {
    if let Some(map) = ArenaMap::builtin(reference) {
        return Ok(map);
    }
    let text = std::fs::read_to_string(reference).map_err(|e| MapError::Invalid(format!("{reference}: {e}")))?;
    let name = std::path::Path::new(reference).file_stem().and_then(|s| s.to_str()).unwrap_or("custom").to_string();
    Ok(crate::world::load_map(&text)?.with_name(name))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRunConfig {
    pub algorithm: Algorithm,
    pub mode: ObservationMode,
    pub map: String,
    pub goal: Placement,
    pub zone_size: f64,
    pub zone_placement: Placement,
    pub total_steps: u64,
    pub seed: u64,
    pub perturbation: PerturbationModel,
    pub camera_width: usize,
    pub camera_height: usize,
    pub ppo: PpoConfig,
    pub td3: Td3Config,
    /// Environment steps between learning-curve points.
    pub curve_interval: u64,
    /// Environment steps between intermediate checkpoints; 0 keeps only the final one.
    pub checkpoint_interval: u64,
}

impl TrainRunConfig {
    /// Defaults: random goal for Lidar, static centre goal for the camera.
    pub fn new(algorithm: Algorithm, mode: ObservationMode) -> Self {
        let (ppo, td3, goal) = match mode {
            ObservationMode::Lidar => (PpoConfig::lidar(), Td3Config::lidar(), Placement::Random),
            ObservationMode::Camera => (PpoConfig::camera(), Td3Config::camera(), Placement::StaticCenter),
        };
        Self {
            algorithm,
            mode,
            map: "default".into(),
            goal,
            zone_size: 0.0,
            zone_placement: Placement::Random,
            total_steps: 500_000,
            seed: 0,
            perturbation: PerturbationModel::default(),
            camera_width: 64,
            camera_height: 64,
            ppo,
            td3,
            curve_interval: 2048,
            checkpoint_interval: 0,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match self.algorithm {
            Algorithm::Ppo => self.ppo.learning_rate,
            Algorithm::Td3 => self.td3.learning_rate,
        }
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        match self.algorithm {
            Algorithm::Ppo => self.ppo.learning_rate = lr,
            Algorithm::Td3 => self.td3.learning_rate = lr,
        }
    }

    /// Environment seen during training; the zone kind follows the observation mode.
    pub fn env_config(&self) -> EnvConfig {
        let mut cfg = EnvConfig::new(self.mode);
        cfg.episode.goal_placement = self.goal;
        cfg.perturbation = self.perturbation;
        cfg.camera.width = self.camera_width;
        cfg.camera.height = self.camera_height;
        if self.zone_size > 0.0 {
            cfg.episode.zones.push(ZoneSpec { kind: self.mode.zone_kind(), size: self.zone_size, placement: self.zone_placement });
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.zone_size >= 0.0 && self.zone_size.is_finite()) {
            return Err(format!("zone size must be a non-negative number, got {}", self.zone_size));
        }
        if self.camera_width < 8 || self.camera_height < 8 {
            return Err("camera frames must be at least 8x8".into());
        }
        if self.curve_interval == 0 {
            return Err("curve_interval must be positive".into());
        }
        if !(self.perturbation.lidar_sigma >= 0.0) {
            return Err("lidar_sigma must be non-negative".into());
        }
        match self.algorithm {
            Algorithm::Ppo => self.ppo.validate(),
            Algorithm::Td3 => self.td3.validate(),
        }
        .map_err(|e| e.to_string())
    }

    /// SHA-256 of the canonical `[env]` and `[train]` sections; names the run directory.
    pub fn hash(&self) -> String {
        crate::report::train_config_hash(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalProtocol {
    pub episodes: usize,
    pub repeats: usize,
    pub zone_sizes: Vec<f64>,
    pub map: String,
    /// `None` picks random placement on maps with obstacles and a static centre zone on empty maps.
    pub zone_placement: Option<Placement>,
    /// `None` follows the observation mode (random for Lidar, centre for the camera).
    pub goal: Option<Placement>,
    pub seed: u64,
    pub record_paths: bool,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        Self {
            episodes: 100,
            repeats: 5,
            zone_sizes: vec![0.0, 3.0, 5.0, 7.0],
            map: "default".into(),
            zone_placement: None,
            goal: None,
            seed: 1000,
            record_paths: true,
        }
    }
}

impl EvalProtocol {
    pub fn validate(&self) -> Result<(), String> {
        if self.episodes == 0 || self.repeats == 0 {
            return Err("episodes and repeats must be at least 1".into());
        }
        if self.zone_sizes.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err("zone sizes must be non-negative numbers".into());
        }
        Ok(())
    }

    pub fn placement_for(&self, map: &ArenaMap) -> Placement {
        self.zone_placement.unwrap_or(if map.obstacles.is_empty() { Placement::StaticCenter } else { Placement::Random })
    }

    /// Environment for one evaluation zone size.
    pub fn env_config(&self, mode: ObservationMode, map: &ArenaMap, zone_size: f64, base: Option<&EnvConfig>) -> EnvConfig {
        let mut cfg = base.cloned().unwrap_or_else(|| EnvConfig::new(mode));
        cfg.mode = mode;
        cfg.episode.goal_placement = self.goal.unwrap_or(match mode {
            ObservationMode::Lidar => Placement::Random,
            ObservationMode::Camera => Placement::StaticCenter,
        });
        cfg.episode.zones.clear();
        if zone_size > 0.0 {
            cfg.episode.zones.push(ZoneSpec { kind: mode.zone_kind(), size: zone_size, placement: self.placement_for(map) });
        }
        cfg
    }
}

/// Formats a zone size the way file names and tables use it (`0`, `3`, `2.5`).
pub fn size_label(size: f64) -> String {
    format!("{size}")
}
