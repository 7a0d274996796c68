//! Numerical construction of proper holomorphic maps between generalized
//! complex pseudoellipsoids, with audits of every estimate the construction
//! relies on.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`). The
//! `*64` aliases below fix the precision used by the command-line driver.

pub mod analysis;
pub mod builder;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod harmonic;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Scalar, Tolerances};

pub type BlockedVector64 = geometry::BlockedVector<f64>;
pub type BoundaryNet64 = geometry::BoundaryNet<f64>;
pub type EstimateConstants64 = estimates::EstimateConstants<f64>;
pub type MapState64 = builder::MapState<f64>;
pub type Schedule64 = builder::Schedule<f64>;
pub type Step64 = builder::Step<f64>;
pub type Checkpoint64 = builder::Checkpoint<f64>;
pub type Tolerances64 = scalar::Tolerances<f64>;
