//! Lambda sweeps of parametrix remainders and moment summaries, serialized as JSON diagnostics.

use serde::{Deserialize, Serialize};

use super::moments::{
    compact_divergence, solve_remainder, sparse_double_divergence, sparse_moments,
};
use super::moments::{moment_check, SupportBox};
use super::parametrix::{parametrix, OscillatoryField, ParametrixDiagnostics, Phase, Profile};
use crate::error::Result;
use crate::fields::{PeriodicField, Spectral};
use crate::mikado::{log_log_slope, BuildStepOutput};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemainderSweep {
    pub lambdas: Vec<u64>,
    pub order: usize,
    /// `sup |U_(k)|` per lambda, `k = 0..=order`.
    pub remainder_sup: Vec<Vec<f64>>,
    /// Fitted `d log sup|U_(k)| / d log lambda` for `k = 1..=order`.
    pub slopes: Vec<f64>,
    /// `sup |R|` with `div R` the mean-free part of `U_(stress_order)`.
    pub stress_order: usize,
    pub stress_sup: Vec<f64>,
    pub stress_slope: f64,
    /// Mean of `U_(stress_order)` removed before the solve.
    pub removed_mean: Vec<f64>,
    pub diagnostics: Vec<ParametrixDiagnostics>,
}

/// Parametrix of `amplitude * profile(lambda Gamma)` for each lambda at a fixed frame.
pub fn remainder_sweep(
    sp: &Spectral,
    amplitude: &PeriodicField,
    profile: &Profile,
    phase: &Phase,
    lambdas: &[u64],
    order: usize,
    stress_order: usize,
) -> Result<RemainderSweep> {
    let mut remainder_sup = Vec::new();
    let mut stress_sup = Vec::new();
    let mut removed_mean = Vec::new();
    let mut diagnostics = Vec::new();
    for &lambda in lambdas {
        let field =
            OscillatoryField::new(amplitude.clone(), profile.clone(), phase.clone(), lambda)?;
        let res = parametrix(sp, &field, order)?;
        let mut u = res.stage_remainder(&field, stress_order)?;
        let means = u.means();
        for (c, m) in means.iter().enumerate() {
            u.comp_mut(c).iter_mut().for_each(|v| *v -= m);
        }
        stress_sup.push(solve_remainder(sp, &u)?.sup_norm());
        removed_mean.push(means.iter().fold(0.0, |a: f64, m| a.max(m.abs())));
        remainder_sup.push(res.diagnostics.remainder_sup.clone());
        diagnostics.push(res.diagnostics);
    }
    let x: Vec<f64> = lambdas.iter().map(|&l| l as f64).collect();
    let slopes = (1..=order)
        .map(|k| {
            let y: Vec<f64> = remainder_sup.iter().map(|r| r[k]).collect();
            log_log_slope(&x, &y)
        })
        .collect();
    let stress_slope = log_log_slope(&x, &stress_sup);
    Ok(RemainderSweep {
        lambdas: lambdas.to_vec(),
        order,
        remainder_sup,
        slopes,
        stress_order,
        stress_sup,
        stress_slope,
        removed_mean,
        diagnostics,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentSummary {
    /// Per-wave double divergences `d_a d_c (lambda^-2 T_J)` checked.
    pub wave_sources: usize,
    /// High-frequency sources `d_j (v_J v_J)` checked.
    pub divergence_sources: usize,
    /// Largest moment relative to the source's `L^1` norm.
    pub worst_relative: f64,
    /// Largest relative leak of the spectral `d_j (v_J v_J)` outside its compact box.
    pub spectral_leak: f64,
}

/// Moments of every source of a build step in divergence form, using compact differences.
pub fn moment_summary(out: &BuildStepOutput) -> Result<MomentSummary> {
    let grid = out.output.v[0].grid();
    let mut worst = 0.0_f64;
    let mut wave_sources = 0;
    for p in &out.potentials {
        let u = sparse_double_divergence(grid, &p.points);
        if let Some(m) = sparse_moments(grid, &u) {
            wave_sources += 1;
            if m.l1 > 0.0 {
                worst = worst.max(m.max_abs() / m.l1);
            }
        }
    }
    let mut divergence_sources = 0;
    let mut spectral_leak = 0.0_f64;
    for s in &out.sources {
        let Some(pot) = &s.potential else { continue };
        let Some(b) = SupportBox::enclosing(pot, 1) else {
            continue;
        };
        let m = moment_check(&compact_divergence(pot)?, &b)?;
        divergence_sources += 1;
        if m.l1 > 0.0 {
            worst = worst.max(m.max_abs() / m.l1);
        }
        spectral_leak = spectral_leak.max(super::moments::leak(&s.amplitude, &b));
    }
    Ok(MomentSummary {
        wave_sources,
        divergence_sources,
        worst_relative: worst,
        spectral_leak,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivsolveReport {
    pub sweep: RemainderSweep,
    pub moments: MomentSummary,
}

impl DivsolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Band-limited stand-in for `psi^2 - 1` of one fat tube: Fourier modes with `|m|_inf <= 1`.
pub fn fat_tube_profile() -> Result<Profile> {
    let fat = crate::mikado::SteadyMikado::single(0.25, 1.0)?;
    let f0 = crate::mikado::DirectionSet.vector(0)[0];
    Profile::from_fn(16, 1, |x| {
        let psi = fat.value(x)[0] / f0;
        psi * psi - 1.0
    })
}

/// Sweep on the first high-frequency source of a build step, at its frame and sample.
pub fn build_step_sweep(
    sp: &Spectral,
    out: &BuildStepOutput,
    lambdas: &[u64],
    order: usize,
    stress_order: usize,
) -> Result<Option<RemainderSweep>> {
    let Some(src) = out
        .sources
        .iter()
        .find(|s| s.kind == crate::mikado::SourceKind::HighFrequency)
    else {
        return Ok(None);
    };
    let phase = Phase::from_frame(&out.frame, src.sample);
    let profile = fat_tube_profile()?;
    remainder_sweep(
        sp,
        &src.amplitude,
        &profile,
        &phase,
        lambdas,
        order,
        stress_order,
    )
    .map(Some)
}
