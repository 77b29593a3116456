//! Lossy compression of 4D gridded geophysical fields by overfitting a small
//! coordinate network and storing its weights at half precision.
//!
//! The pipeline is: [`gridfield`] data → [`trainer::train`] (sampling via
//! [`coords`], encoding via [`features`], the [`network`] itself) →
//! [`artifact`] (quantize and serialize) → [`decoder`] (evaluate anywhere).
//!
//! Numerical code is generic over [`Scalar`]; the crate-root aliases fix the
//! working precision used by the pipeline.

pub mod angles;
pub mod artifact;
pub mod cli;
pub mod binio;
pub mod coords;
pub mod decoder;
pub mod error;
pub mod features;
pub mod gridfield;
pub mod kvtext;
pub mod linalg;
pub mod network;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Working precision of training and decompression.
pub type Real = f32;

pub type Params = network::ModelParams<Real>;
pub type Params64 = network::ModelParams<f64>;
pub type Cache = network::ForwardCache<Real>;
