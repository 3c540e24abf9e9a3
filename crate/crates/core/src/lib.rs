pub mod boundary;
pub mod error;
pub mod free_group;
pub mod rational;

pub use error::{Error, Result};
pub use free_group::{FreeGroup, Letter, ReducedWord};
pub mod densities;
pub mod actions;
pub mod averaging;
pub mod relations;
