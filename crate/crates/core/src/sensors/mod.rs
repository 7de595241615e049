//! Lidar, camera and goal-relative sensing plus the two attack models.

mod camera;
mod lidar;
mod obs;

pub use camera::{
    blackout_camera, render_fpv, CameraConfig, CameraFrame, CEILING_COLOR, FLOOR_COLOR, GOAL_COLOR, WALL_FALLOFF,
    WALL_HEIGHT, WALL_NEAR_GREY, WALL_SIDE_FACTOR,
};
pub use lidar::{cast_ray, perturb_lidar, raycast, LidarConfig, LidarScan, PerturbationModel, LIDAR_BEAMS};
pub use obs::{assemble_lidar_obs, goal_polar, ObservationVector, LIDAR_OBS_DIM};
