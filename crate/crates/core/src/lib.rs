//! Prediction-error analysis for convex penalized least squares
//! y = Xβ* + ε, β̂ ∈ argmin ‖Xβ − y‖² + 2h(β).

pub mod certify;
pub mod curves;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod par;
pub mod rng;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
