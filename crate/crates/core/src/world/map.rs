//! Arena maps and the line-oriented map file format.
//!
//! ```text
//! # comment
//! bounds W H
//! box CX CY W H
//! ```
//!
//! All values are metres. The arena spans `[0, W] x [0, H]`; each `box` is an
//! axis-aligned obstacle given by its centre and extents.

use sha2::{Digest, Sha256};

use crate::geom::{Rect, Segment, Vec2};
use crate::hash_hex;

pub const DEFAULT_MAP: &str = include_str!("../../assets/default.map");
pub const EMPTY_MAP: &str = include_str!("../../assets/empty.map");

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MapError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid map: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArenaMap {
    pub name: String,
    pub bounds: Rect,
    pub obstacles: Vec<Rect>,
    segments: Vec<Segment>,
    hash: String,
}

impl ArenaMap {
    /// Builds and validates a map. The hash covers geometry only, not the name.
    pub fn new(name: impl Into<String>, bounds: Rect, obstacles: Vec<Rect>) -> Result<Self, MapError> {
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) || !bounds.width().is_finite() || !bounds.height().is_finite()
        {
            return Err(MapError::Invalid(format!(
                "bounds must have positive finite area, got {} x {}",
                bounds.width(),
                bounds.height()
            )));
        }
        for (i, ob) in obstacles.iter().enumerate() {
            if !(ob.width() > 0.0 && ob.height() > 0.0) {
                return Err(MapError::Invalid(format!("obstacle {} has non-positive extent", i + 1)));
            }
            if !bounds.contains_rect(ob) {
                return Err(MapError::Invalid(format!("obstacle {} extends outside the arena bounds", i + 1)));
            }
            for (j, other) in obstacles.iter().enumerate().take(i) {
                if ob.overlaps(other) {
                    return Err(MapError::Invalid(format!("obstacles {} and {} overlap", j + 1, i + 1)));
                }
            }
        }
        let mut segments: Vec<Segment> = bounds.edges().to_vec();
        for ob in &obstacles {
            segments.extend_from_slice(&ob.edges());
        }
        let hash = hash_hex(&Sha256::digest(canonical_text(&bounds, &obstacles).as_bytes()));
        Ok(Self { name: name.into(), bounds, obstacles, segments, hash })
    }

    pub fn default_arena() -> Self {
        load_map(DEFAULT_MAP).expect("bundled default map is valid").with_name("default")
    }

    pub fn empty_arena() -> Self {
        load_map(EMPTY_MAP).expect("bundled empty map is valid").with_name("empty")
    }

    /// Resolves `default`/`empty` (with or without `.map`) to a bundled asset.
    pub fn builtin(name: &str) -> Option<Self> {
        match name.trim_end_matches(".map") {
            "default" => Some(Self::default_arena()),
            "empty" => Some(Self::empty_arena()),
            _ => None,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Boundary edges followed by every obstacle edge.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn center(&self) -> Vec2 {
        self.bounds.center()
    }

    pub fn diagonal(&self) -> f64 {
        self.bounds.width().hypot(self.bounds.height())
    }

    /// SHA-256 of the canonical map text, lowercase hex.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn to_text(&self) -> String {
        canonical_text(&self.bounds, &self.obstacles)
    }
}

fn canonical_text(bounds: &Rect, obstacles: &[Rect]) -> String {
    let mut out = format!("bounds {} {}\n", bounds.width(), bounds.height());
    for ob in obstacles {
        let c = ob.center();
        out.push_str(&format!("box {} {} {} {}\n", c.x, c.y, ob.width(), ob.height()));
    }
    out
}

/// Parses and validates map text.
pub fn load_map(text: &str) -> Result<ArenaMap, MapError> {
    let mut bounds: Option<Rect> = None;
    let mut obstacles = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap_or_default();
        let numbers: Vec<f64> = parts
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| MapError::Parse { line: line_no, message: format!("expected a number, found `{tok}`") })
            })
            .collect::<Result<_, _>>()?;
        match keyword {
            "bounds" => {
                if bounds.is_some() {
                    return Err(MapError::Parse { line: line_no, message: "duplicate `bounds` line".into() });
                }
                if !obstacles.is_empty() {
                    return Err(MapError::Parse { line: line_no, message: "`bounds` must precede `box` lines".into() });
                }
                if numbers.len() != 2 {
                    return Err(MapError::Parse {
                        line: line_no,
                        message: format!("`bounds` takes 2 values, found {}", numbers.len()),
                    });
                }
                bounds = Some(Rect { min: Vec2::new(0.0, 0.0), max: Vec2::new(numbers[0], numbers[1]) });
            }
            "box" => {
                if bounds.is_none() {
                    return Err(MapError::Parse { line: line_no, message: "`box` before `bounds`".into() });
                }
                if numbers.len() != 4 {
                    return Err(MapError::Parse {
                        line: line_no,
                        message: format!("`box` takes 4 values, found {}", numbers.len()),
                    });
                }
                obstacles.push(Rect::from_center(Vec2::new(numbers[0], numbers[1]), numbers[2], numbers[3]));
            }
            other => {
                return Err(MapError::Parse { line: line_no, message: format!("unknown directive `{other}`") });
            }
        }
    }
    let bounds = bounds.ok_or(MapError::Parse { line: 0, message: "missing `bounds` line".into() })?;
    ArenaMap::new("custom", bounds, obstacles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_only_is_empty_arena() {
        let map = load_map("bounds 10 10").unwrap();
        assert!(map.obstacles.is_empty());
        assert_eq!(map.bounds.width(), 10.0);
        assert_eq!(map.segments().len(), 4);
    }

    #[test]
    fn default_map_has_four_obstacles() {
        let map = ArenaMap::default_arena();
        assert_eq!(map.obstacles.len(), 4);
        assert_eq!(map.segments().len(), 20);
        assert_eq!(ArenaMap::empty_arena().obstacles.len(), 0);
    }

    #[test]
    fn obstacle_past_bounds_is_rejected() {
        let err = load_map("bounds 10 10\nbox 9.8 5 1 1\n").unwrap_err();
        assert!(matches!(err, MapError::Invalid(_)));
    }

    #[test]
    fn overlapping_obstacles_are_rejected() {
        let err = load_map("bounds 10 10\nbox 5 5 2 2\nbox 5.5 5 2 2\n").unwrap_err();
        assert!(matches!(err, MapError::Invalid(ref m) if m.contains("overlap")));
        // touching edges are fine
        load_map("bounds 10 10\nbox 5 5 2 2\nbox 7 5 2 2\n").unwrap();
    }

    #[test]
    fn parse_errors_report_line() {
        let err = load_map("# header\nbounds 10 10\nbox 1 2 x 4\n").unwrap_err();
        assert_eq!(err, MapError::Parse { line: 3, message: "expected a number, found `x`".into() });
        let err = load_map("bounds 10\n").unwrap_err();
        assert!(matches!(err, MapError::Parse { line: 1, .. }));
        let err = load_map("wall 1 2\n").unwrap_err();
        assert!(matches!(err, MapError::Parse { line: 1, .. }));
        assert!(load_map("bounds 0 10").is_err());
    }

    #[test]
    fn hash_ignores_comments_and_name() {
        let a = load_map("bounds 10 10 # c\nbox 5 5 1 1").unwrap();
        let b = load_map("# another comment\nbounds 10 10\n\nbox 5 5 1 1\n").unwrap().with_name("x");
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = load_map("bounds 10 10\nbox 5 5 1 2").unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
