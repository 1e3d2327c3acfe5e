//! Whole-system small-signal models of AC grids built from per-machine
//! impedances, with a time-domain reference simulator for cross-checks.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod eig;
pub mod emtsim;
pub mod error;
pub mod frames;
pub mod linalg;
pub mod lti;
pub mod machines;
pub mod network;
pub mod scalar;
pub mod sysmodel;
pub mod system;

pub use error::{Error, Result};
pub use lti::LtiSystem;
pub use scalar::{Cx, Real};

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex64;
/// Double-precision state-space system.
pub type Lti = LtiSystem<f64>;
