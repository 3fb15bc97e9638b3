//! Restrictiveness and completeness of parametric behavioral models.

pub mod cli;
pub mod complete;
pub mod error;
pub mod fit;
pub mod io;
pub mod items;
pub mod models;
pub mod problem;
pub mod restrict;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
