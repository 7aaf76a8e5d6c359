//! Elastic waves crossing a time-modulated imperfect interface in 1D.
//!
//! The crate couples a fourth-order ADER scheme with an immersed-interface
//! treatment of the jump conditions, and carries two independent reference
//! solutions: harmonic balance in the frequency domain and a characteristics
//! solution in the time domain.

pub mod characteristics;
pub mod diagnostics;
pub mod error;
pub mod esim;
pub mod fdtd;
pub mod hbm;
pub mod model;
pub mod simulation;

pub use error::{Error, Result};
