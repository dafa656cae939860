//! Frequency-energy level iteration in log space, its asymptotics, and the continuity-modulus optimizer.

mod levels;
mod modulus;
mod trace;

use serde::{Deserialize, Serialize};

pub use levels::{
    init_levels, step_levels, step_levels_with_gain, FrequencyEnergyLevels, IterationConfig,
};
pub use modulus::{
    default_dx_grid, effective_b, fit_b, gamma_sweep, geometric_grid, holder_modulus,
    holder_modulus_log, leading_coefficient, optimal_gamma, BFit, ModulusEstimate,
};
pub use trace::{
    asymptotic_ratios, asymptotics_report, check_shrinking, iterate, iterate_with_gains,
    AsymptoticRatios, IterationTrace, StageRecord,
};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSums {
    /// Partial sums of `Xi^{-1} e_v^{-1/2}` over stages.
    pub support_partial: Vec<f64>,
    /// Partial sums of `C_L L_1^{1/2} e_{R,1}^{1/2} 2^{-k}` from `k = 0`.
    pub c0_partial: Vec<f64>,
    pub c0_total: f64,
}

impl SeriesSums {
    /// Fraction of the support sum contributed by stages after `k`.
    pub fn support_tail_fraction(&self, k: usize) -> f64 {
        let total = *self.support_partial.last().expect("nonempty");
        (total - self.support_partial[k - 1]) / total
    }
}

pub fn support_and_c0_sums(trace: &IterationTrace) -> SeriesSums {
    let terms: Vec<f64> = trace
        .records
        .iter()
        .map(|r| (-r.log_xi - 0.5 * r.log_ev).exp())
        .collect();
    let mut acc = 0.0;
    let support_partial = terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    let first = trace.stage(1);
    let amp = trace.config.c_l * first.log_xihat.sqrt() * (0.5 * first.log_er).exp();
    let mut acc = 0.0;
    let c0_partial = (0..trace.k_max())
        .map(|k| {
            acc += amp * 0.5f64.powi(k as i32);
            acc
        })
        .collect();
    SeriesSums {
        support_partial,
        c0_partial,
        c0_total: 2.0 * amp,
    }
}

/// Largest `log e_{R,1}` (to `tol`) for which the shrinking condition and the C^0 bound hold for all stages.
pub fn passing_stress_level(config: &IterationConfig, tol: f64) -> Result<f64> {
    let passes = |log_er: f64| -> bool {
        let c = IterationConfig {
            log_er_init: log_er,
            ..*config
        };
        match iterate(&c) {
            Ok(t) => check_shrinking(&t).is_empty() && support_and_c0_sums(&t).c0_total <= 5.0,
            Err(_) => false,
        }
    };
    let mut lo = -1.0;
    while !passes(lo) {
        lo *= 2.0;
        if lo < -1e6 {
            return Err(LabError::Config("no passing stress level found".into()));
        }
    }
    let mut hi = -1e-9;
    if passes(hi) {
        return Ok(hi);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// JSON summary of an iteration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub config: IterationConfig,
    pub passing_log_er_init: f64,
    pub shrinking_violations: usize,
    pub max_key_rule_relative: f64,
    pub b_estimates: BFit,
    pub b_target: f64,
    pub gamma_star: f64,
    pub asymptotics: Vec<AsymptoticRatios>,
    pub c0_total: f64,
    pub support_tail_after_50: Option<f64>,
}

pub fn summarize(
    config: &IterationConfig,
    dx_points: usize,
) -> Result<(IterationTrace, IterationSummary)> {
    let passing = passing_stress_level(config, 1e-6)?;
    let trace = iterate(config)?;
    let grid = default_dx_grid(&trace, dx_points);
    let fit = fit_b(&trace, &grid)?;
    let sums = support_and_c0_sums(&trace);
    let ks: Vec<usize> = [10, 100, 1_000, 10_000]
        .into_iter()
        .filter(|&k| k < trace.k_max())
        .collect();
    let summary = IterationSummary {
        config: *config,
        passing_log_er_init: passing,
        shrinking_violations: check_shrinking(&trace).len(),
        max_key_rule_relative: trace.key_rule_relative.iter().cloned().fold(0.0, f64::max),
        b_target: fit.target,
        b_estimates: fit,
        gamma_star: optimal_gamma(config.a_exp, 1.0, 10.0, 0.01).0,
        asymptotics: asymptotics_report(&trace, &ks),
        c0_total: sums.c0_total,
        support_tail_after_50: (trace.k_max() > 50).then(|| sums.support_tail_fraction(50)),
    };
    Ok((trace, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c0_sum_is_geometric() {
        let t = iterate(&IterationConfig {
            k_max: 80,
            ..Default::default()
        })
        .unwrap();
        let s = support_and_c0_sums(&t);
        let first = t.stage(1);
        let want = 2.0 * first.log_xihat.sqrt() * (0.5 * first.log_er).exp();
        assert!((s.c0_total - want).abs() < 1e-15);
        assert!((s.c0_partial.last().unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn c0_sum_vanishes_with_stress() {
        let a = iterate(&IterationConfig {
            k_max: 10,
            log_er_init: -20.0,
            ..Default::default()
        })
        .unwrap();
        let b = iterate(&IterationConfig {
            k_max: 10,
            log_er_init: -40.0,
            ..Default::default()
        })
        .unwrap();
        assert!(support_and_c0_sums(&b).c0_total < support_and_c0_sums(&a).c0_total);
    }

    #[test]
    fn bisection_finds_a_passing_level() {
        let c = IterationConfig {
            k_max: 200,
            ..Default::default()
        };
        let l = passing_stress_level(&c, 1e-4).unwrap();
        let t = iterate(&IterationConfig {
            log_er_init: l,
            ..c
        })
        .unwrap();
        assert!(check_shrinking(&t).is_empty());
        let t = iterate(&IterationConfig {
            log_er_init: l + 0.01,
            ..c
        });
        if let Ok(t) = t {
            assert!(!check_shrinking(&t).is_empty() || support_and_c0_sums(&t).c0_total > 5.0);
        }
    }
}
