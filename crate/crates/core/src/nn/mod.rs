//! Dense and convolutional networks with reverse-mode gradients and Adam.

mod adam;
pub mod gradcheck;
mod init;
mod linalg;
mod network;
pub mod policy;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{gradient_check, gradient_check_with, GradCheckReport};
pub use init::{orthogonal, uniform_fan_in};
pub use linalg::gemm;
pub use network::{
    Activation, ForwardCache, GradientSet, Gradients, LayerSpec, Network, NetworkSpec, ParameterSet, CAMERA_FEATURES,
};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("forward cache does not belong to the current parameters")]
    StaleCache,
    #[error("non-finite {0}")]
    NonFinite(&'static str),
}
