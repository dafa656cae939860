//! One localized convex-integration step built from threaded Mikado tubes.

mod directions;
mod lines;

pub use directions::{pair_of, DirectionSet, DIRECTIONS};
pub use lines::{
    class_index, class_of, cross_coords, default_layout, line_distance, place_lines, ClosestPair,
    Line, LineLayout, A_PERIOD, DEFAULT_LAYOUT, DEFAULT_R0,
};
mod tube;
pub use tube::{
    OmegaTildeGradient, PotentialReport, ProfileSpec, Radial, RadialProfile, SampledTube,
    TubeFamily, TubeValue,
};
mod partition;
pub use partition::{normalized_bump, Partition};
mod frame;
pub use frame::{
    advect_frame, cellular_flow, invert3, FrameConfig, Interpolator, TimeCutoff, TransportedFrame,
};
mod amplitudes;
pub use amplitudes::{cancellation_defect, choose_pressure, energy_floor, solve_amplitudes};
mod waves;
pub use waves::{
    correction_sup, double_divergence, fast_samples, frame_stretch, CorrectionCoefficients,
    SlowJet, SparsePotential, WaveBuilder, WaveId, WaveSample,
};
mod step;
pub use step::{
    build_step, build_step_from, complete_state, log_log_slope, mollification_scale,
    synthetic_input, BuildStepConfig, BuildStepOutput, BuildStepReport, CorrectionSweep,
    ErrorPieces, InputState, MollificationRequirement, OscillatorySource, PieceNorms, SourceKind,
};
mod steady;
pub use steady::SteadyMikado;
mod check;
pub use check::{mikado_check, Bound, CheckRow, MikadoCheckConfig, MikadoCheckReport};
