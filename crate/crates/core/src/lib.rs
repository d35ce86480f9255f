//! Finite-element spectral lab for Poincaré, Friedrichs and Maxwell
//! constants on bounded Lipschitz domains.

pub mod assembly;
pub mod cli;
pub mod constants;
pub mod error;
pub mod helmholtz;
pub mod mesh;
pub mod sparse;
pub mod spectral;

pub use error::{Error, ErrorKind, Result};
