//! Planar geometry primitives shared by the simulator and the sensors.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn sub(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        self.sub(other).norm()
    }
}

/// Closed line segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    /// Distance along the ray `origin + t * dir` (t ≥ 0, `dir` unit length) to
    /// the first point of this segment, if the ray hits it.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let edge = self.b.sub(self.a);
        let denom = dir.cross(edge);
        let to_a = self.a.sub(origin);
        if denom.abs() < 1e-15 {
            // Parallel: only a collinear overlap can hit; take the nearest endpoint ahead.
            if to_a.cross(dir).abs() > 1e-12 {
                return None;
            }
            let ta = to_a.dot(dir);
            let tb = self.b.sub(origin).dot(dir);
            let (lo, hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
            if hi < 0.0 {
                return None;
            }
            return Some(lo.max(0.0));
        }
        let t = to_a.cross(edge) / denom;
        let u = to_a.cross(dir) / denom;
        if t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) {
            Some(t)
        } else {
            None
        }
    }

    /// True when the two closed segments share at least one point.
    pub fn intersects(&self, other: &Segment) -> bool {
        let d1 = orient(other.a, other.b, self.a);
        let d2 = orient(other.a, other.b, self.b);
        let d3 = orient(self.a, self.b, other.a);
        let d4 = orient(self.a, self.b, other.b);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
        {
            return true;
        }
        (d1 == 0.0 && on_segment(other, self.a))
            || (d2 == 0.0 && on_segment(other, self.b))
            || (d3 == 0.0 && on_segment(self, other.a))
            || (d4 == 0.0 && on_segment(self, other.b))
    }

    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        let edge = self.b.sub(self.a);
        let len2 = edge.dot(edge);
        if len2 == 0.0 {
            return p.distance(self.a);
        }
        let t = (p.sub(self.a).dot(edge) / len2).clamp(0.0, 1.0);
        p.distance(self.a.add(edge.scale(t)))
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(s: &Segment, p: Vec2) -> bool {
    p.x >= s.a.x.min(s.b.x) && p.x <= s.a.x.max(s.b.x) && p.y >= s.a.y.min(s.b.y) && p.y <= s.a.y.max(s.b.y)
}

/// Axis-aligned rectangle, closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn from_center(center: Vec2, width: f64, height: f64) -> Self {
        Self {
            min: Vec2::new(center.x - width / 2.0, center.y - height / 2.0),
            max: Vec2::new(center.x + width / 2.0, center.y + height / 2.0),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new((self.min.x + self.max.x) / 2.0, (self.min.y + self.max.y) / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.min.x >= self.min.x && other.max.x <= self.max.x && other.min.y >= self.min.y && other.max.y <= self.max.y
    }

    /// Interiors overlap; rectangles that only touch along an edge do not.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.min.x < other.max.x && other.min.x < self.max.x && self.min.y < other.max.y && other.min.y < self.max.y
    }

    /// Euclidean distance from `p` to the rectangle (zero inside).
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx.hypot(dy)
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [
            self.min,
            Vec2::new(self.max.x, self.min.y),
            self.max,
            Vec2::new(self.min.x, self.max.y),
        ]
    }

    pub fn edges(&self) -> [Segment; 4] {
        let c = self.corners();
        [
            Segment::new(c[0], c[1]),
            Segment::new(c[1], c[2]),
            Segment::new(c[2], c[3]),
            Segment::new(c[3], c[0]),
        ]
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut wrapped = PI - (PI - theta).rem_euclid(2.0 * PI);
    if wrapped <= -PI {
        wrapped += 2.0 * PI;
    }
    wrapped
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_keeps_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        for i in -1000..1000 {
            let w = wrap_angle(i as f64 * 0.0137);
            assert!(w > -PI && w <= PI);
        }
    }

    #[test]
    fn ray_hits_perpendicular_segment() {
        let s = Segment::new(Vec2::new(2.0, -1.0), Vec2::new(2.0, 1.0));
        assert_eq!(s.ray_hit(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)), Some(2.0));
        assert_eq!(s.ray_hit(Vec2::new(0.0, 0.0), Vec2::new(-1.0, 0.0)), None);
        assert_eq!(s.ray_hit(Vec2::new(0.0, 5.0), Vec2::new(1.0, 0.0)), None);
    }

    #[test]
    fn rect_distance_and_overlap() {
        let r = Rect::from_center(Vec2::new(0.0, 0.0), 2.0, 2.0);
        assert_eq!(r.distance_to(Vec2::new(0.5, 0.5)), 0.0);
        assert!((r.distance_to(Vec2::new(4.0, 5.0)) - 5.0).abs() < 1e-12);
        let touching = Rect::from_center(Vec2::new(2.0, 0.0), 2.0, 2.0);
        assert!(!r.overlaps(&touching));
        let overlapping = Rect::from_center(Vec2::new(1.5, 0.0), 2.0, 2.0);
        assert!(r.overlaps(&overlapping));
    }

    #[test]
    fn segment_intersection_cases() {
        let a = Segment::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 2.0));
        let b = Segment::new(Vec2::new(0.0, 2.0), Vec2::new(2.0, 0.0));
        assert!(a.intersects(&b));
        let c = Segment::new(Vec2::new(3.0, 3.0), Vec2::new(4.0, 4.0));
        assert!(!a.intersects(&c));
        let d = Segment::new(Vec2::new(2.0, 2.0), Vec2::new(3.0, 0.0));
        assert!(a.intersects(&d));
    }
}
