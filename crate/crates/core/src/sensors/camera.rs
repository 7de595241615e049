//! First-person column raycast renderer and the camera blackout attack.
//!
//! Frames are stored row-major, HWC, with channel values in `[0, 1]`.

use std::io::Write;
use std::path::Path;

use crate::geom::Vec2;
use crate::world::{ArenaMap, GoalSpec, Pose};

pub const CEILING_COLOR: [f64; 3] = [0.55, 0.65, 0.80];
pub const FLOOR_COLOR: [f64; 3] = [0.35, 0.30, 0.25];
/// Goal marker colour; no other palette entry uses it.
pub const GOAL_COLOR: [f64; 3] = [1.0, 0.4, 0.7];
/// Grey level of a wall at zero distance.
pub const WALL_NEAR_GREY: f64 = 0.9;
/// Distance falloff of the wall grey level, per metre.
pub const WALL_FALLOFF: f64 = 0.12;
/// Relative brightness of walls facing along y (north/south faces).
pub const WALL_SIDE_FACTOR: f64 = 0.8;
/// Wall height above the floor; the camera sits at half of it.
pub const WALL_HEIGHT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, radians.
    pub hfov: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self { width: 64, height: 64, hfov: std::f64::consts::FRAC_PI_2 }
    }
}

impl CameraConfig {
    pub fn focal_px(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.hfov / 2.0).tan()
    }

    /// Relative bearing (counter-clockwise positive) of the centre of column `col`.
    pub fn column_bearing(&self, col: usize) -> f64 {
        let offset = col as f64 + 0.5 - self.width as f64 / 2.0;
        -(offset / self.focal_px()).atan()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraFrame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl CameraFrame {
    pub fn filled(width: usize, height: usize, color: [f64; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&color);
        }
        Self { width, height, pixels }
    }

    pub fn pixel(&self, col: usize, row: usize) -> [f64; 3] {
        let i = (row * self.width + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    fn set(&mut self, col: usize, row: usize, color: [f64; 3]) {
        let i = (row * self.width + col) * 3;
        self.pixels[i..i + 3].copy_from_slice(&color);
    }

    /// Number of pixels painted with the goal colour.
    pub fn goal_pixel_count(&self) -> usize {
        self.pixels.chunks_exact(3).filter(|p| p == &GOAL_COLOR).count()
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect()
    }

    pub fn write_png(&self, path: &Path) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut writer = std::io::BufWriter::new(file);
        {
            let mut encoder = png::Encoder::new(&mut writer, self.width as u32, self.height as u32);
            encoder.set_color(png::ColorType::Rgb);
            encoder.set_depth(png::BitDepth::Eight);
            let mut png_writer = encoder.write_header().map_err(std::io::Error::other)?;
            png_writer.write_image_data(&self.to_rgb8()).map_err(std::io::Error::other)?;
        }
        writer.flush()
    }
}

struct ColumnHit {
    depth: f64,
    y_facing: bool,
}

fn column_hit(origin: Vec2, theta: f64, bearing: f64, map: &ArenaMap) -> ColumnHit {
    let dir = Vec2::from_angle(theta + bearing);
    let mut best = f64::INFINITY;
    let mut y_facing = false;
    for seg in map.segments() {
        if let Some(t) = seg.ray_hit(origin, dir) {
            if t < best {
                best = t;
                y_facing = seg.a.y == seg.b.y;
            }
        }
    }
    ColumnHit { depth: best * bearing.cos(), y_facing }
}

/// Renders the robot's view. Walls are grey, shaded by distance; the goal is a
/// pink disc of the marker diameter, occluded per column by nearer walls.
pub fn render_fpv(pose: &Pose, map: &ArenaMap, goal: &GoalSpec, config: &CameraConfig) -> CameraFrame {
    let (w, h) = (config.width, config.height);
    assert!(w >= 8 && h >= 8, "camera frames must be at least 8x8");
    let focal = config.focal_px();
    let origin = pose.position();
    let mut frame = CameraFrame::filled(w, h, CEILING_COLOR);
    let mut depths = vec![f64::INFINITY; w];

    for (col, depth_slot) in depths.iter_mut().enumerate() {
        let hit = column_hit(origin, pose.theta, config.column_bearing(col), map);
        *depth_slot = hit.depth;
        let half = focal * (WALL_HEIGHT / 2.0) / hit.depth.max(1e-9);
        let mut grey = WALL_NEAR_GREY / (1.0 + WALL_FALLOFF * hit.depth);
        if hit.y_facing {
            grey *= WALL_SIDE_FACTOR;
        }
        for row in 0..h {
            let y = row as f64 + 0.5 - h as f64 / 2.0;
            let color = if y.abs() <= half {
                [grey, grey, grey]
            } else if y > 0.0 {
                FLOOR_COLOR
            } else {
                CEILING_COLOR
            };
            frame.set(col, row, color);
        }
    }

    let rel = goal.position.sub(origin);
    let forward = Vec2::from_angle(pose.theta);
    let right = Vec2::new(pose.theta.sin(), -pose.theta.cos());
    let z = rel.dot(forward);
    if z > 1e-3 {
        let cx = w as f64 / 2.0 + focal * rel.dot(right) / z;
        let cy = h as f64 / 2.0;
        let radius = focal * (goal.marker_diameter / 2.0) / z;
        let c_lo = ((cx - radius).floor().max(0.0)) as usize;
        let c_hi = ((cx + radius).ceil().min(w as f64)) as usize;
        let r_lo = ((cy - radius).floor().max(0.0)) as usize;
        let r_hi = ((cy + radius).ceil().min(h as f64)) as usize;
        for col in c_lo..c_hi {
            if z >= depths[col] {
                continue;
            }
            let dx = col as f64 + 0.5 - cx;
            for row in r_lo..r_hi {
                let dy = row as f64 + 0.5 - cy;
                if dx * dx + dy * dy <= radius * radius {
                    frame.set(col, row, GOAL_COLOR);
                }
            }
        }
    }
    frame
}

/// Zeroes every channel when `active`.
pub fn blackout_camera(frame: &CameraFrame, active: bool) -> CameraFrame {
    if !active {
        return frame.clone();
    }
    CameraFrame { width: frame.width, height: frame.height, pixels: vec![0.0; frame.pixels.len()] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{load_map, Placement};

    fn goal_at(x: f64, y: f64) -> GoalSpec {
        GoalSpec { position: Vec2::new(x, y), reach_radius: 0.5, placement: Placement::Random, marker_diameter: 0.5 }
    }

    #[test]
    fn goal_ahead_is_pink_in_centre_band() {
        let map = load_map("bounds 10 10").unwrap();
        let cfg = CameraConfig::default();
        let frame = render_fpv(&Pose::new(5.0, 5.0, 0.0), &map, &goal_at(6.0, 5.0), &cfg);
        assert!(frame.goal_pixel_count() > 0);
        assert_eq!(frame.pixel(32, 32), GOAL_COLOR);
        assert_eq!(frame.pixel(31, 31), GOAL_COLOR);
        assert_ne!(frame.pixel(2, 32), GOAL_COLOR);
    }

    #[test]
    fn goal_behind_wall_is_hidden() {
        let map = load_map("bounds 10 10\nbox 6 5 0.4 2").unwrap();
        let frame = render_fpv(&Pose::new(4.0, 5.0, 0.0), &map, &goal_at(7.5, 5.0), &CameraConfig::default());
        assert_eq!(frame.goal_pixel_count(), 0);
    }

    #[test]
    fn goal_behind_robot_is_hidden() {
        let map = load_map("bounds 10 10").unwrap();
        let frame = render_fpv(&Pose::new(5.0, 5.0, 0.0), &map, &goal_at(3.0, 5.0), &CameraConfig::default());
        assert_eq!(frame.goal_pixel_count(), 0);
    }

    #[test]
    fn rendering_is_deterministic_and_bounded() {
        let map = crate::world::ArenaMap::default_arena();
        let cfg = CameraConfig { width: 160, height: 160, ..Default::default() };
        let a = render_fpv(&Pose::new(1.3, 8.2, -0.7), &map, &goal_at(5.0, 5.0), &cfg);
        let b = render_fpv(&Pose::new(1.3, 8.2, -0.7), &map, &goal_at(5.0, 5.0), &cfg);
        assert_eq!(a, b);
        assert_eq!(a.pixels.len(), 160 * 160 * 3);
        assert!(a.pixels.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn blackout_zeroes_and_is_idempotent() {
        let map = load_map("bounds 10 10").unwrap();
        let f = render_fpv(&Pose::new(5.0, 5.0, 0.3), &map, &goal_at(7.0, 6.0), &CameraConfig::default());
        let b = blackout_camera(&f, true);
        assert!(b.pixels.iter().all(|&v| v == 0.0));
        assert_eq!(blackout_camera(&b, true), b);
        assert_eq!(blackout_camera(&f, false), f);
    }
}
