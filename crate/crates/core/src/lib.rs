//! Multiple-input neural operators.
//!
//! The crate covers the whole pipeline: input-function sampling
//! ([`grf`]), sensor encodings and Faber projections ([`encoding`]),
//! reference solvers ([`solvers`]), dense networks with explicit gradients
//! ([`nn`]), the combination layers ([`tensor`], [`model`]), datasets and
//! training ([`data`], [`train`]), and the benchmark systems and presets
//! ([`systems`], [`presets`]).
//!
//! Model-side types are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the default `f64` precision.

pub mod data;
pub mod diagnostics;
pub mod encoding;
pub mod error;
pub mod grf;
pub mod model;
pub mod nn;
pub mod presets;
pub mod scalar;
pub mod solvers;
pub mod systems;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor64 = tensor::Tensor<f64>;
pub type DenseNet64 = nn::DenseNet<f64>;
pub type DenseNet32 = nn::DenseNet<f32>;
pub type MIONet64 = model::MIONet<f64>;
pub type MIONet32 = model::MIONet<f32>;
