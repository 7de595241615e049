//! Planar Lidar raycasting and the Gaussian range-noise attack.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geom::Vec2;
use crate::world::{ArenaMap, Pose};

pub const LIDAR_BEAMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarConfig {
    pub beams: usize,
    /// Total angular span, centred on the heading.
    pub fov: f64,
    pub max_range: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self { beams: LIDAR_BEAMS, fov: PI, max_range: 10.0 }
    }
}

impl LidarConfig {
    /// Bearing of beam `i` relative to the robot heading.
    pub fn beam_bearing(&self, i: usize) -> f64 {
        -self.fov / 2.0 + i as f64 * self.fov / (self.beams - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub ranges: Vec<f64>,
    pub max_range: f64,
}

impl LidarScan {
    pub fn to_csv_row(&self) -> String {
        self.ranges.iter().map(|r| format!("{r:.6}")).collect::<Vec<_>>().join(",")
    }
}

/// Distance from `origin` along `dir` to the nearest map edge, clamped to `max_range`.
pub fn cast_ray(origin: Vec2, dir: Vec2, map: &ArenaMap, max_range: f64) -> f64 {
    let mut best = max_range;
    for seg in map.segments() {
        if let Some(t) = seg.ray_hit(origin, dir) {
            if t < best {
                best = t;
            }
        }
    }
    best.clamp(0.0, max_range)
}

pub fn raycast(pose: &Pose, map: &ArenaMap, config: &LidarConfig) -> LidarScan {
    assert!(config.beams >= 2, "a scan needs at least two beams");
    let origin = pose.position();
    let ranges = (0..config.beams)
        .map(|i| cast_ray(origin, Vec2::from_angle(pose.theta + config.beam_bearing(i)), map, config.max_range))
        .collect();
    LidarScan { ranges, max_range: config.max_range }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationModel {
    /// Standard deviation of the Gaussian magnitude, metres.
    pub lidar_sigma: f64,
    /// Upper bound on the magnitude, metres.
    pub lidar_clamp: f64,
}

impl Default for PerturbationModel {
    fn default() -> Self {
        Self { lidar_sigma: 2.5, lidar_clamp: 5.0 }
    }
}

impl PerturbationModel {
    /// One signed perturbation: magnitude `min(|N(0, σ²)|, clamp)` with a fair random sign.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        let magnitude = (z * self.lidar_sigma).abs().min(self.lidar_clamp);
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }
}

/// Adds independent per-beam noise when `active`; otherwise returns the scan unchanged.
pub fn perturb_lidar<R: Rng + ?Sized>(scan: &LidarScan, active: bool, model: &PerturbationModel, rng: &mut R) -> LidarScan {
    if !active || model.lidar_sigma == 0.0 {
        return scan.clone();
    }
    let ranges = scan.ranges.iter().map(|r| (r + model.draw(rng)).clamp(0.0, scan.max_range)).collect();
    LidarScan { ranges, max_range: scan.max_range }
}
