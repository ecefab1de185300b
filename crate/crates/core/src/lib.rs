//! Adaptive boson sampling: linear-optics simulation, adaptive schemes,
//! partial distinguishability, qudit tomography and kernel classifiers.

pub mod abs;
pub mod error;
pub mod fock;
pub mod interferometer;
pub mod kernel;
pub mod linalg;
pub mod ml;
pub mod noise;
pub mod qstate;
pub mod seed;

pub use error::{Error, Result};
