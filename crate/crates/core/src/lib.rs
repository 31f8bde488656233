//! Lippmann–Schwinger–Low scattering states on a finite momentum grid.
//!
//! The model space is a mirror-symmetric momentum grid with free energies
//! `E = k²`. Scattering states are built three ways (integral equation,
//! full-resolvent form, and the rank-one closed form) and the finite-ε
//! identities they satisfy are measured as relative residuals.

pub mod dd;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod lsl;
mod par;
pub mod resolvent;
pub mod scalar;
pub mod verify;

pub use error::{LabError, Result};
