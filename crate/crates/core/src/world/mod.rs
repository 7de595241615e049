//! Arena, robot kinematics, episode lifecycle and reward.

mod episode;
mod map;

pub use episode::{
    check_collision, in_zone, spawn_episode, step, ActionCommand, DenialZone, EpisodeConfig, EpisodeState, GoalSpec,
    Placement, Pose, SpawnError, StepOutcome, Terminal, ZoneKind, ZoneSpec, COLLISION_REWARD, DECISION_DT,
    GOAL_MARKER_DIAMETER, GOAL_REWARD, MAX_EPISODE_STEPS, STEP_PENALTY, SUBSTEPS,
};
pub use map::{load_map, ArenaMap, MapError, DEFAULT_MAP, EMPTY_MAP};
