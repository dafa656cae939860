//! Energy-flux diagnostics: the commutator stress, the trilinear flux, the local dissipation
//! density, Besov norm estimates, and a mollifier-independence test.

mod besov;
mod cet;
mod independence;
mod report;
mod samples;

pub use besov::{besov_norm, besov_norms, besov_third, BesovEstimate, ShiftSet};
pub use cet::{
    cet_stress, duchon_robert_density, trilinear_flux, Coarse, CoarseLevel, HolderCheck,
};
pub use independence::{
    extrapolate_to_zero, flux_series, kernel_independence_test, log_eps_grid, verdict_of,
    IndependenceReport, KernelSeries, Verdict, MAX_EXTRAPOLATION_POINTS,
};
pub use report::{calibrate_bound, flux_report, FittedOrders, FluxConfig, FluxReport, FluxRow};
pub use samples::{lacunary, random_solenoidal, rough_solenoidal, shear};
