//! PPO and TD3 for the navigation task.

mod buffers;
pub mod checkpoint;
mod gae;
mod policy;
mod ppo;
mod td3;

pub use buffers::{ReplayBatch, ReplayBuffer, RolloutBuffer};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, CheckpointMeta, PolicyCheckpoint};
pub use gae::{gae_advantages, StepFlag};
pub use policy::{ActMode, PolicyNet, PolicyNoise};
pub use ppo::{PpoAgent, PpoBatch, PpoConfig, PpoDiagnostics, PpoGrads, PpoSample};
pub use td3::{smooth_target_action, td3_target, Td3Agent, Td3Config, Td3Diagnostics, Td3Targets};

use crate::nn::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Ppo,
    Td3,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Ppo => "ppo",
            Algorithm::Td3 => "td3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ppo" => Some(Self::Ppo),
            "td3" => Some(Self::Td3),
            _ => None,
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            Algorithm::Ppo => 1,
            Algorithm::Td3 => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(Self::Ppo),
            2 => Some(Self::Td3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RlError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("replay buffer holds {have} transitions, need {need}")]
    BufferUnderfull { have: usize, need: usize },
    #[error("observation has {got} values, policy expects shape {expected:?}")]
    ObservationShape { got: usize, expected: Vec<usize> },
    #[error("non-finite {what}: {diagnostics}")]
    NonFinite { what: &'static str, diagnostics: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}
