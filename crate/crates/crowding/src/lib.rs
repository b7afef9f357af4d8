//! Frequency-crowding analysis for fixed-frequency transmon processors.
//!
//! The crate covers junction statistics, TLS spectroscopy, gate-collision
//! dynamics and fidelity bounds, frequency allocation on a square lattice and
//! Monte Carlo yield estimates for whole processors.

pub mod collision_bounds;
pub mod device_model;
pub mod error;
pub mod gate_dynamics;
pub mod junction_stats;
pub mod lattice_allocation;
pub mod qpu_mc;
pub mod rng;
pub mod sampling;
pub mod tls_analysis;
pub mod tls_collision_mc;

pub use error::{Error, Result};
