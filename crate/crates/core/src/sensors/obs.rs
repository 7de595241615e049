//! Goal-relative features and the 24-value Lidar observation.

use crate::geom::{wrap_angle, Vec2};
use crate::sensors::LidarScan;
use crate::world::{ActionCommand, Pose};

pub const LIDAR_OBS_DIM: usize = 24;

/// Lidar observation: 20 normalised ranges, goal distance, goal bearing and the previous action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationVector(pub [f64; LIDAR_OBS_DIM]);

impl ObservationVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean distance and heading-relative bearing in (-π, π] from the robot to `goal`.
pub fn goal_polar(pose: &Pose, goal: Vec2) -> (f64, f64) {
    let dx = goal.x - pose.x;
    let dy = goal.y - pose.y;
    (dx.hypot(dy), wrap_angle(dy.atan2(dx) - pose.theta))
}

/// Packs `[ranges / max_range, distance / diagonal, bearing / π, prev.linear, prev.angular]`.
pub fn assemble_lidar_obs(scan: &LidarScan, polar: (f64, f64), prev: ActionCommand, diagonal: f64) -> ObservationVector {
    assert_eq!(scan.ranges.len() + 4, LIDAR_OBS_DIM, "lidar observation expects 20 beams");
    let mut v = [0.0; LIDAR_OBS_DIM];
    for (slot, r) in v.iter_mut().zip(&scan.ranges) {
        *slot = (r / scan.max_range).clamp(0.0, 1.0);
    }
    let n = scan.ranges.len();
    v[n] = polar.0 / diagonal;
    v[n + 1] = polar.1 / std::f64::consts::PI;
    v[n + 2] = prev.linear;
    v[n + 3] = prev.angular;
    ObservationVector(v)
}
