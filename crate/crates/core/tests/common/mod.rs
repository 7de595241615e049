//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use dnav_core::geom::{Rect, Vec2};
use dnav_core::world::{ArenaMap, MAX_EPISODE_STEPS};
use dnav_core::SimRng;
use rand::Rng;

/// Random valid map: a W×H arena with up to `max_boxes` non-overlapping boxes.
pub fn random_map(rng: &mut SimRng, max_boxes: usize) -> ArenaMap {
    let w = rng.random_range(4.0..12.0);
    let h = rng.random_range(4.0..12.0);
    let bounds = Rect { min: Vec2::new(0.0, 0.0), max: Vec2::new(w, h) };
    let n = rng.random_range(0..=max_boxes);
    let mut boxes: Vec<Rect> = Vec::new();
    for _ in 0..n * 20 {
        if boxes.len() == n {
            break;
        }
        let bw = rng.random_range(0.2..2.5);
        let bh = rng.random_range(0.2..2.5);
        if bw >= w || bh >= h {
            continue;
        }
        let cx = rng.random_range(bw / 2.0..w - bw / 2.0);
        let cy = rng.random_range(bh / 2.0..h - bh / 2.0);
        let r = Rect { min: Vec2::new(cx - bw / 2.0, cy - bh / 2.0), max: Vec2::new(cx + bw / 2.0, cy + bh / 2.0) };
        if boxes.iter().all(|b| r.max.x < b.min.x || b.max.x < r.min.x || r.max.y < b.min.y || b.max.y < r.min.y) {
            boxes.push(r);
        }
    }
    ArenaMap::new("random", bounds, boxes).expect("generated map is valid")
}

/// Uniform point inside the bounds and strictly outside every box.
pub fn free_point(rng: &mut SimRng, map: &ArenaMap) -> Vec2 {
    loop {
        let b = &map.bounds;
        let p = Vec2::new(rng.random_range(b.min.x..b.max.x), rng.random_range(b.min.y..b.max.y));
        if map.obstacles.iter().all(|r| !(r.min.x <= p.x && p.x <= r.max.x && r.min.y <= p.y && p.y <= r.max.y)) {
            return p;
        }
    }
}

/// Squared distance from `p` to the closed box, by per-axis gaps.
pub fn box_gap_sq(r: &Rect, p: Vec2) -> f64 {
    let gx = if p.x < r.min.x { r.min.x - p.x } else if p.x > r.max.x { p.x - r.max.x } else { 0.0 };
    let gy = if p.y < r.min.y { r.min.y - p.y } else if p.y > r.max.y { p.y - r.max.y } else { 0.0 };
    gx * gx + gy * gy
}

/// Brute-force disc test: leaves the arena, or some box point is closer than `radius`.
pub fn disc_collides(map: &ArenaMap, p: Vec2, radius: f64) -> bool {
    let b = &map.bounds;
    let outside = p.x - radius < b.min.x || p.x + radius > b.max.x || p.y - radius < b.min.y || p.y + radius > b.max.y;
    outside || map.obstacles.iter().any(|r| box_gap_sq(r, p) < radius * radius)
}

/// Whether the segment `p0 -> p1` touches the closed box (slab clipping).
fn segment_touches_box(r: &Rect, p0: Vec2, p1: Vec2) -> bool {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for (a, d, min, max) in [(p0.x, p1.x - p0.x, r.min.x, r.max.x), (p0.y, p1.y - p0.y, r.min.y, r.max.y)] {
        if d == 0.0 {
            if a < min || a > max {
                return false;
            }
        } else {
            let (t0, t1) = ((min - a) / d, (max - a) / d);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    lo <= hi
}

/// Distance from `p` to the nearest surface: a box face or the arena wall.
fn clearance(map: &ArenaMap, p: Vec2) -> f64 {
    let b = &map.bounds;
    let wall = (p.x - b.min.x).min(b.max.x - p.x).min(p.y - b.min.y).min(b.max.y - p.y);
    map.obstacles.iter().map(|r| box_gap_sq(r, p).sqrt()).fold(wall, f64::min)
}

/// Marches the ray in steps of at most `step` metres and reports the end of the
/// first step that reaches a surface. Each short step is swept against the boxes,
/// so a corner clipped between two samples still counts; steps longer than `step`
/// are only taken while the clearance guarantees free space.
pub fn march_range(map: &ArenaMap, origin: Vec2, dir: Vec2, max_range: f64, step: f64) -> f64 {
    let b = &map.bounds;
    let mut t = 0.0;
    while t < max_range {
        let p0 = origin.add(dir.scale(t));
        let free = clearance(map, p0);
        if free > 2.0 * step {
            t += free - step;
            continue;
        }
        let t1 = (t + step).min(max_range);
        let p1 = origin.add(dir.scale(t1));
        let wall = p1.x <= b.min.x || p1.x >= b.max.x || p1.y <= b.min.y || p1.y >= b.max.y;
        if wall || map.obstacles.iter().any(|r| segment_touches_box(r, p0, p1)) {
            return t1;
        }
        t = t1;
    }
    max_range
}

/// Whether the segment `a -> b` touches any box.
pub fn segment_blocked(map: &ArenaMap, a: Vec2, b: Vec2) -> bool {
    map.obstacles.iter().any(|r| segment_touches_box(r, a, b))
}

/// `E[min(|N(0, sigma^2)|, clamp)]` by composite Simpson quadrature of the folded density.
pub fn clamped_folded_normal_mean(sigma: f64, clamp: f64) -> f64 {
    let n = 200_000;
    let h = clamp / n as f64;
    let density = |x: f64| 2.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt()) * (-(x * x) / (2.0 * sigma * sigma)).exp();
    let simpson = |f: &dyn Fn(f64) -> f64| {
        let mut s = f(0.0) + f(clamp);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let body = simpson(&|x| x * density(x));
    let mass = simpson(&density);
    body + clamp * (1.0 - mass)
}

/// Outcome of one episode as seen from its reward stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardTally {
    Goal { penalties: u32 },
    Collision { penalties: u32 },
    Timeout,
}

impl RewardTally {
    /// Exact return in fiftieths of a unit.
    pub fn numerator(&self) -> i64 {
        let max = MAX_EPISODE_STEPS as i64;
        match *self {
            RewardTally::Goal { penalties } => max - penalties as i64,
            RewardTally::Collision { penalties } => -max - penalties as i64,
            RewardTally::Timeout => -max,
        }
    }
}

/// True iff `x` is the double nearest to `num / den` (ties either way), checked in
/// exact integer arithmetic on the binary expansion of `x` and its neighbours.
pub fn is_nearest_double(x: f64, num: i64, den: i64) -> bool {
    assert!(den > 0);
    if !x.is_finite() {
        return false;
    }
    let here = abs_diff_scaled(x, num, den);
    here <= abs_diff_scaled(x.next_up(), num, den) && here <= abs_diff_scaled(x.next_down(), num, den)
}

fn decompose(y: f64) -> (i64, i32) {
    if y == 0.0 {
        return (0, 0);
    }
    let bits = y.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1i64 << 52), exp - 1075) };
    (sign * m, e)
}

/// `|y - num/den| * den * 2^S` for a fixed large S, as an exact integer.
fn abs_diff_scaled(y: f64, num: i64, den: i64) -> u128 {
    const S: i32 = 60;
    let (m, e) = decompose(y);
    // y * den * 2^S = m * den * 2^(e + S); only moderate magnitudes are needed here
    let shift = e + S;
    assert!((0..=60).contains(&shift), "value outside the supported range");
    let lhs = (m as i128) * (den as i128) << shift;
    let rhs = (num as i128) << S;
    (lhs - rhs).unsigned_abs()
}
