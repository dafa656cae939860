//! Desk-scale convex integration laboratory for incompressible Euler flows on the periodic torus.

pub mod cli;
pub mod divsolve;
pub mod error;
pub mod fields;
pub mod flux;
pub mod mikado;
pub mod params;
mod quad;

pub use error::{LabError, Result};
