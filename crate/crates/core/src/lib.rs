//! Tensor engine, reverse-mode autodiff and the multiscale residual VAE.

pub mod conv;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{build_model, LatentStats, TideConfig, TideVae};
pub use graph::{Activation, Gradients, Graph, Var};
pub use rng::{sample_standard_normal, Rng};
pub use scalar::Scalar;
pub use tensor::Tensor;
pub use trainer::{train, TrainConfig, TrainReport};

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type TideVae32 = TideVae<f32>;
pub type TideVae64 = TideVae<f64>;
