//! Periodic fields on the unit 3-torus and the spectral operators acting on them.

mod field;
mod grid;
mod kernel;
pub mod pfld;
mod spectral;
mod state;

pub use field::{c2, c3, compensated_sum, PeriodicField, Rank};
pub use grid::Grid;
pub use kernel::{KernelId, KernelTransform};
pub use spectral::Spectral;
pub use state::{euler_reynolds_residual, residual_at, EulerReynoldsState};
