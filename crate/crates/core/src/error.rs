use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("log of log frequency undefined: log xihat = {0} <= 1")]
    LogLogUndefined(f64),

    #[error("trace too short: log xihat at k_max = {have} does not exceed {need}")]
    TraceTooShort { have: f64, need: f64 },

    #[error("grid size {0} must be an even power of two >= 8")]
    BadGrid(usize),

    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),

    #[error(
        "nonzero mean {mean:e} in component {component}; the equation has no periodic solution"
    )]
    NonzeroMean { component: usize, mean: f64 },

    #[error("mollification scale {0} outside (0, 1/4)")]
    EpsOutOfRange(f64),

    #[error("need at least {need} time samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("infeasible tube geometry: lines {a} and {b} are {dist:.5} apart, need > {need:.5}")]
    InfeasibleTubes {
        a: String,
        b: String,
        dist: f64,
        need: f64,
    },

    #[error("tube profile unresolved: {0}")]
    Unresolved(String),

    #[error("partition size {0} must be even and in [3 xi, 6 xi]")]
    BadPartition(String),

    #[error("CFL violation: {0}")]
    Cfl(String),

    #[error("frame determinant {det:.4} outside [1/2, 2] at point {index}")]
    FrameDeterminant { det: f64, index: usize },

    #[error("stress target outside the amplitude cone: coefficient {value:e} for direction {direction} at point {index}")]
    OutsideCone {
        value: f64,
        direction: usize,
        index: usize,
    },

    #[error("aliasing guard: {0}")]
    Aliasing(String),

    #[error("zero wave vector")]
    ZeroVector,

    #[error("support leaks outside box: {0:e}")]
    SupportLeak(f64),

    #[error("bad PFLD data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
