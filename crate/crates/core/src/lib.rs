//! First-order methods for sequential two-player zero-sum games.

pub mod dgf;
pub mod error;
pub mod games;
pub mod oracle;
pub mod sample;
pub mod scext;
pub mod solver;
pub mod sparse;
pub mod treeplex;
pub mod validate;

pub use error::{Error, Result};
