//! Symmetric anti-divergence, oscillatory parametrix and moment checks.

mod moments;
mod parametrix;
mod report;
mod symbol;

pub use moments::{
    compact_divergence, compact_double_divergence, leak, moment_check, solve_remainder,
    sparse_double_divergence, sparse_moments, Moments, SupportBox, LEAK_TOLERANCE,
};
pub use parametrix::{
    parametrix, FourierMode, ModeStages, OscillatoryField, ParametrixDiagnostics, ParametrixResult,
    Phase, Profile, MAX_ORDER,
};
pub use report::{
    build_step_sweep, fat_tube_profile, moment_summary, remainder_sweep, DivsolveReport,
    MomentSummary, RemainderSweep,
};
pub use symbol::{qbar_real_part, qbar_symbol};
