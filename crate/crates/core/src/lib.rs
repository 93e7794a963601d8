//! Balanced node configurations on a cyclic stack of punctured planes.

pub mod cli;
pub mod configuration;
pub mod error;
pub mod io;
pub mod linalg;
pub mod polynomial;
pub mod qbalance;
pub mod solvers;

pub use error::{Error, Result};
