//! Quantum friction on a polarizable particle moving parallel to a planar
//! surface or inside a planar two-plate cavity.

pub mod cli;
pub mod error;
pub mod forces;
pub mod greens;
pub mod quadrature;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};
