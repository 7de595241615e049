//! Robot kinematics, episode spawning, stepping and the reward function.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};

use crate::geom::{wrap_angle, Rect, Vec2};
use crate::world::ArenaMap;
use crate::SimRng;

/// Hard cap on decisions per episode.
pub const MAX_EPISODE_STEPS: u32 = 50;
/// Simulated seconds per decision.
pub const DECISION_DT: f64 = 0.2;
/// Physics substeps per decision (0.05 s each).
pub const SUBSTEPS: u32 = 4;
pub const GOAL_REWARD: f64 = 1.0;
pub const COLLISION_REWARD: f64 = -1.0;
pub const STEP_PENALTY: f64 = -1.0 / MAX_EPISODE_STEPS as f64;
pub const GOAL_MARKER_DIAMETER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading in (-π, π].
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Normalised velocity command: `linear` in [0, 1], `angular` in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActionCommand {
    pub linear: f64,
    pub angular: f64,
}

impl ActionCommand {
    /// Clamps both components into range; NaN maps to zero.
    pub fn new(linear: f64, angular: f64) -> Self {
        let fix = |v: f64| if v.is_nan() { 0.0 } else { v };
        Self { linear: fix(linear).clamp(0.0, 1.0), angular: fix(angular).clamp(-1.0, 1.0) }
    }

    /// Maps a point of the unit box `[-1, 1]^2` onto the command ranges.
    pub fn from_unit(u: [f64; 2]) -> Self {
        Self::new((u[0] + 1.0) / 2.0, u[1])
    }

    pub fn to_unit(&self) -> [f64; 2] {
        [self.linear * 2.0 - 1.0, self.angular]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZoneKind {
    LidarGauss,
    CameraBlackout,
}

impl ZoneKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ZoneKind::LidarGauss => "lidar-gauss",
            ZoneKind::CameraBlackout => "camera-blackout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    Random,
    StaticCenter,
}

impl Placement {
    pub fn as_str(&self) -> &'static str {
        match self {
            Placement::Random => "random",
            Placement::StaticCenter => "static-center",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random" => Some(Placement::Random),
            "static-center" | "static" => Some(Placement::StaticCenter),
            _ => None,
        }
    }
}

/// How a zone is drawn for every new episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneSpec {
    pub kind: ZoneKind,
    /// Side length in metres; zero disables the zone.
    pub size: f64,
    pub placement: Placement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenialZone {
    pub center: Vec2,
    pub size: f64,
    pub kind: ZoneKind,
    pub placement: Placement,
}

impl DenialZone {
    pub fn rect(&self) -> Rect {
        Rect::from_center(self.center, self.size, self.size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalSpec {
    pub position: Vec2,
    pub reach_radius: f64,
    pub placement: Placement,
    pub marker_diameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub goal_placement: Placement,
    pub goal_radius: f64,
    pub min_goal_separation: f64,
    pub robot_radius: f64,
    /// m/s at `linear = 1`.
    pub max_linear: f64,
    /// rad/s at `angular = ±1`.
    pub max_angular: f64,
    pub zones: Vec<ZoneSpec>,
    pub spawn_attempts: u32,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            goal_placement: Placement::Random,
            goal_radius: 0.5,
            min_goal_separation: 1.0,
            robot_radius: 0.3,
            max_linear: 1.0,
            max_angular: 1.0,
            zones: Vec::new(),
            spawn_attempts: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    None,
    Goal,
    Collision,
    Timeout,
}

impl Terminal {
    pub fn is_done(&self) -> bool {
        !matches!(self, Terminal::None)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Terminal::None => "none",
            Terminal::Goal => "goal",
            Terminal::Collision => "collision",
            Terminal::Timeout => "timeout",
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpawnError {
    #[error("could not place {what} after {attempts} attempts")]
    Unsatisfiable { what: &'static str, attempts: u32 },
    #[error("zone of size {size} m does not fit in the arena")]
    ZoneTooLarge { size: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeState {
    pub robot: Pose,
    pub prev_action: ActionCommand,
    pub goal: GoalSpec,
    pub zones: Vec<DenialZone>,
    pub step_index: u32,
    pub terminal: Terminal,
    /// Stream used for spawning and, afterwards, for sensor noise.
    pub rng: SimRng,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub terminal: Terminal,
    pub next_state: EpisodeState,
}

/// True iff the robot disc overlaps an obstacle or crosses the outer wall.
pub fn check_collision(pose: &Pose, map: &ArenaMap, robot_radius: f64) -> bool {
    let b = &map.bounds;
    if pose.x - robot_radius < b.min.x
        || pose.x + robot_radius > b.max.x
        || pose.y - robot_radius < b.min.y
        || pose.y + robot_radius > b.max.y
    {
        return true;
    }
    let p = pose.position();
    map.obstacles.iter().any(|ob| ob.distance_to(p) < robot_radius)
}

/// True iff the robot position lies inside the (closed) zone rectangle.
pub fn in_zone(pose: &Pose, zone: &DenialZone) -> bool {
    zone.size > 0.0 && zone.rect().contains(pose.position())
}

fn uniform_point(rng: &mut SimRng, rect: &Rect) -> Vec2 {
    Vec2::new(
        rect.min.x + rng.random::<f64>() * rect.width(),
        rect.min.y + rng.random::<f64>() * rect.height(),
    )
}

/// Samples a fresh episode; the same `(map, config, seed)` always gives the same state.
pub fn spawn_episode(map: &ArenaMap, config: &EpisodeConfig, seed: u64) -> Result<EpisodeState, SpawnError> {
    let mut rng = SimRng::seed_from_u64(seed);
    let attempts = config.spawn_attempts;

    let static_goal = match config.goal_placement {
        Placement::StaticCenter => Some(map.center()),
        Placement::Random => None,
    };

    let mut robot = None;
    for _ in 0..attempts {
        let p = uniform_point(&mut rng, &map.bounds);
        let theta = rng.random_range(-PI..PI);
        let pose = Pose::new(p.x, p.y, theta);
        let far_enough = static_goal.is_none_or(|g| g.distance(p) >= config.min_goal_separation);
        if far_enough && !check_collision(&pose, map, config.robot_radius) {
            robot = Some(pose);
            break;
        }
    }
    let robot = robot.ok_or(SpawnError::Unsatisfiable { what: "robot", attempts })?;

    let goal_position = match static_goal {
        Some(g) => g,
        None => {
            let mut found = None;
            for _ in 0..attempts {
                let p = uniform_point(&mut rng, &map.bounds);
                let clear = !check_collision(&Pose::new(p.x, p.y, 0.0), map, config.robot_radius);
                if clear && p.distance(robot.position()) >= config.min_goal_separation {
                    found = Some(p);
                    break;
                }
            }
            found.ok_or(SpawnError::Unsatisfiable { what: "goal", attempts })?
        }
    };

    let mut zones = Vec::with_capacity(config.zones.len());
    for spec in &config.zones {
        let b = &map.bounds;
        if spec.size > b.width() || spec.size > b.height() {
            return Err(SpawnError::ZoneTooLarge { size: spec.size });
        }
        let center = if spec.size <= 0.0 || spec.placement == Placement::StaticCenter {
            map.center()
        } else {
            let half = spec.size / 2.0;
            let inner = Rect { min: Vec2::new(b.min.x + half, b.min.y + half), max: Vec2::new(b.max.x - half, b.max.y - half) };
            uniform_point(&mut rng, &inner)
        };
        zones.push(DenialZone { center, size: spec.size.max(0.0), kind: spec.kind, placement: spec.placement });
    }

    Ok(EpisodeState {
        robot,
        prev_action: ActionCommand::default(),
        goal: GoalSpec {
            position: goal_position,
            reach_radius: config.goal_radius,
            placement: config.goal_placement,
            marker_diameter: GOAL_MARKER_DIAMETER,
        },
        zones,
        step_index: 0,
        terminal: Terminal::None,
        rng,
    })
}

impl EpisodeState {
    /// Advances one decision in place and returns `(reward, terminal)`.
    pub fn advance(&mut self, action: ActionCommand, map: &ArenaMap, config: &EpisodeConfig) -> (f64, Terminal) {
        debug_assert!(!self.terminal.is_done(), "step called on a finished episode");
        let action = ActionCommand::new(action.linear, action.angular);
        let v = action.linear * config.max_linear;
        let w = action.angular * config.max_angular;
        let dt = DECISION_DT / SUBSTEPS as f64;

        let mut pose = self.robot;
        let mut terminal = Terminal::None;
        for _ in 0..SUBSTEPS {
            let next = Pose::new(pose.x + v * pose.theta.cos() * dt, pose.y + v * pose.theta.sin() * dt, pose.theta + w * dt);
            if check_collision(&next, map, config.robot_radius) {
                terminal = Terminal::Collision;
                break;
            }
            pose = next;
            if pose.position().distance(self.goal.position) <= self.goal.reach_radius {
                terminal = Terminal::Goal;
                break;
            }
        }
        self.robot = pose;
        self.prev_action = action;
        self.step_index += 1;
        if terminal == Terminal::None && self.step_index >= MAX_EPISODE_STEPS {
            terminal = Terminal::Timeout;
        }
        self.terminal = terminal;
        let reward = match terminal {
            Terminal::Goal => GOAL_REWARD,
            Terminal::Collision => COLLISION_REWARD,
            Terminal::None | Terminal::Timeout => STEP_PENALTY,
        };
        (reward, terminal)
    }

    /// Return accumulated so far, counted in whole step penalties and divided once,
    /// so it is the nearest double to `±1 - k/50` rather than a running float sum.
    pub fn episode_return(&self) -> f64 {
        let steps = self.step_index as i64;
        let max = MAX_EPISODE_STEPS as i64;
        let units = match self.terminal {
            Terminal::Goal => max - (steps - 1),
            Terminal::Collision => -max - (steps - 1),
            Terminal::None | Terminal::Timeout => -steps,
        };
        units as f64 / max as f64
    }

    pub fn in_zone_of(&self, kind: ZoneKind) -> bool {
        self.zones.iter().any(|z| z.kind == kind && in_zone(&self.robot, z))
    }
}

/// Pure form of [`EpisodeState::advance`].
pub fn step(state: &EpisodeState, action: ActionCommand, map: &ArenaMap, config: &EpisodeConfig) -> StepOutcome {
    let mut next_state = state.clone();
    let (reward, terminal) = next_state.advance(action, map, config);
    StepOutcome { reward, terminal, next_state }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::load_map;

    fn empty() -> ArenaMap {
        load_map("bounds 10 10").unwrap()
    }

    fn state_at(pose: Pose, goal: Vec2) -> EpisodeState {
        let mut s = spawn_episode(&empty(), &EpisodeConfig::default(), 0).unwrap();
        s.robot = pose;
        s.goal.position = goal;
        s
    }

    #[test]
    fn action_is_clamped() {
        assert_eq!(ActionCommand::new(2.0, -3.0), ActionCommand { linear: 1.0, angular: -1.0 });
        assert_eq!(ActionCommand::new(-0.5, f64::NAN), ActionCommand { linear: 0.0, angular: 0.0 });
        assert_eq!(ActionCommand::from_unit([-1.0, 0.5]), ActionCommand { linear: 0.0, angular: 0.5 });
    }

    #[test]
    fn straight_step_in_empty_arena() {
        let s = state_at(Pose::new(5.0, 5.0, 0.0), Vec2::new(1.0, 1.0));
        let out = step(&s, ActionCommand::new(1.0, 0.0), &empty(), &EpisodeConfig::default());
        assert!((out.next_state.robot.x - 5.2).abs() < 1e-12);
        assert_eq!(out.next_state.robot.y, 5.0);
        assert_eq!(out.next_state.robot.theta, 0.0);
        assert_eq!(out.reward, -0.02);
        assert_eq!(out.terminal, Terminal::None);
        assert_eq!(out.next_state.step_index, 1);
    }

    #[test]
    fn reaching_goal_pays_one() {
        let s = state_at(Pose::new(5.0, 5.0, 0.0), Vec2::new(5.6, 5.0));
        let out = step(&s, ActionCommand::new(1.0, 0.0), &empty(), &EpisodeConfig::default());
        assert_eq!(out.terminal, Terminal::Goal);
        assert_eq!(out.reward, 1.0);
    }

    #[test]
    fn wall_collision_pays_minus_one_and_keeps_last_clear_pose() {
        let s = state_at(Pose::new(0.4, 5.0, PI), Vec2::new(9.0, 9.0));
        let cfg = EpisodeConfig::default();
        let out = step(&s, ActionCommand::new(1.0, 0.0), &empty(), &cfg);
        assert_eq!(out.terminal, Terminal::Collision);
        assert_eq!(out.reward, -1.0);
        assert!(!check_collision(&out.next_state.robot, &empty(), cfg.robot_radius));
    }

    #[test]
    fn timeout_after_fifty_steps_sums_to_minus_one() {
        let mut s = state_at(Pose::new(5.0, 5.0, 0.0), Vec2::new(9.0, 9.0));
        let cfg = EpisodeConfig::default();
        let mut penalties = 0;
        let mut last = Terminal::None;
        while !s.terminal.is_done() {
            let (r, t) = s.advance(ActionCommand::new(0.0, 0.3), &empty(), &cfg);
            assert_eq!(r, STEP_PENALTY);
            penalties += 1;
            last = t;
        }
        assert_eq!(last, Terminal::Timeout);
        assert_eq!(penalties, 50);
        assert_eq!(penalties as f64 * STEP_PENALTY, -1.0);
        assert_eq!(s.episode_return(), -1.0);
    }

    #[test]
    fn collision_examples() {
        let map = empty();
        assert!(!check_collision(&Pose::new(5.0, 5.0, 1.0), &map, 0.3));
        assert!(check_collision(&Pose::new(0.1, 5.0, 0.0), &map, 0.3));
        let boxed = load_map("bounds 10 10\nbox 5 5 1 1").unwrap();
        assert!(check_collision(&Pose::new(5.0, 5.75, 0.0), &boxed, 0.3));
        assert!(!check_collision(&Pose::new(5.0, 5.85, 0.0), &boxed, 0.3));
    }

    #[test]
    fn zone_membership() {
        let zone = DenialZone { center: Vec2::new(5.0, 5.0), size: 3.0, kind: ZoneKind::LidarGauss, placement: Placement::Random };
        assert!(in_zone(&Pose::new(5.0, 5.0, 0.0), &zone));
        assert!(in_zone(&Pose::new(6.5, 5.0, 0.0), &zone));
        assert!(!in_zone(&Pose::new(6.51, 5.0, 0.0), &zone));
        let none = DenialZone { size: 0.0, ..zone };
        assert!(!in_zone(&Pose::new(5.0, 5.0, 0.0), &none));
    }

    #[test]
    fn spawn_is_deterministic() {
        let map = ArenaMap::default_arena();
        let mut cfg = EpisodeConfig::default();
        cfg.zones.push(ZoneSpec { kind: ZoneKind::LidarGauss, size: 3.0, placement: Placement::Random });
        let a = spawn_episode(&map, &cfg, 7).unwrap();
        let b = spawn_episode(&map, &cfg, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, spawn_episode(&map, &cfg, 8).unwrap());
    }

    #[test]
    fn static_goal_is_arena_centre() {
        let cfg = EpisodeConfig { goal_placement: Placement::StaticCenter, ..Default::default() };
        let s = spawn_episode(&ArenaMap::default_arena(), &cfg, 3).unwrap();
        assert_eq!(s.goal.position, Vec2::new(5.0, 5.0));
    }

    #[test]
    fn large_zone_centre_is_confined() {
        let cfg = EpisodeConfig {
            zones: vec![ZoneSpec { kind: ZoneKind::CameraBlackout, size: 7.0, placement: Placement::Random }],
            ..Default::default()
        };
        let map = ArenaMap::default_arena();
        for seed in 0..500 {
            let z = spawn_episode(&map, &cfg, seed).unwrap().zones[0];
            assert!((3.5..=6.5).contains(&z.center.x) && (3.5..=6.5).contains(&z.center.y));
        }
    }

    #[test]
    fn saturated_map_fails_to_spawn() {
        let map = load_map("bounds 2 2\nbox 1 1 2 2").unwrap();
        let err = spawn_episode(&map, &EpisodeConfig::default(), 1).unwrap_err();
        assert_eq!(err, SpawnError::Unsatisfiable { what: "robot", attempts: 1000 });
    }
}
