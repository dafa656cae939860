use serde::{Deserialize, Serialize};

use super::levels::IterationConfig;
use super::trace::IterationTrace;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    /// `log |dx|^{-1}`
    pub log_inv_dx: f64,
    pub k_bar: usize,
    pub log_bound: f64,
}

/// Continuity modulus at separation `exp(-log_inv_dx)`.
///
/// `k_bar` is the last stage whose effective frequency does not exceed `|dx|^{-1}`; ties count.
pub fn holder_modulus_log(trace: &IterationTrace, log_inv_dx: f64) -> Result<ModulusEstimate> {
    if !log_inv_dx.is_finite() || log_inv_dx < 100f64.ln() {
        return Err(LabError::Config(format!(
            "|dx| must lie in (0, 1e-2], got log |dx|^-1 = {log_inv_dx}"
        )));
    }
    let last = trace.records.last().expect("trace is nonempty");
    if last.log_xihat <= log_inv_dx {
        return Err(LabError::TraceTooShort {
            have: last.log_xihat,
            need: log_inv_dx,
        });
    }
    let k_bar = trace.records.partition_point(|r| r.log_xihat <= log_inv_dx);
    if k_bar == 0 {
        return Err(LabError::Config(format!(
            "first stage frequency exceeds |dx|^-1 (log {} > {log_inv_dx})",
            trace.records[0].log_xihat
        )));
    }
    let r = trace.stage(k_bar);
    let d_xihat = trace.delta(k_bar, |s| s.log_xihat).expect("k_bar < k_max");
    let c_l = trace.config.c_l;
    let log_bound =
        (8.0 * c_l).ln() + r.log_xihat.ln() + d_xihat / 3.0 + (r.log_xihat / 3.0 + r.log_er / 2.0)
            - log_inv_dx / 3.0;
    Ok(ModulusEstimate {
        log_inv_dx,
        k_bar,
        log_bound,
    })
}

pub fn holder_modulus(trace: &IterationTrace, delta_x: f64) -> Result<ModulusEstimate> {
    if !(delta_x > 0.0 && delta_x <= 1e-2) {
        return Err(LabError::Config(format!(
            "|dx| = {delta_x} outside (0, 1e-2]"
        )));
    }
    holder_modulus_log(trace, -delta_x.ln())
}

/// Effective constant `B` in `|dx|^{1/3 - B sqrt(loglog / log)}`.
pub fn effective_b(trace: &IterationTrace, m: &ModulusEstimate) -> f64 {
    let l = m.log_inv_dx;
    (l / 3.0 + m.log_bound - (8.0 * trace.config.c_l).ln()) / (l * l.ln()).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BFit {
    pub log_inv_dx: Vec<f64>,
    pub b: Vec<f64>,
    /// Intercept of a least-squares fit of `B` against `logloglog / loglog` of `|dx|^{-1}`.
    pub extrapolated: f64,
    pub target: f64,
}

/// Geometric grid of `log |dx|^{-1}` with `count` points between `lo` and `hi`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let r = (hi / lo).ln() / (count.max(2) - 1) as f64;
    (0..count).map(|i| lo * (r * i as f64).exp()).collect()
}

/// Default grid spanning up to the deepest separation resolved by the trace.
pub fn default_dx_grid(trace: &IterationTrace, count: usize) -> Vec<f64> {
    let top = trace.records[trace.k_max() - 2].log_xihat;
    geometric_grid(top * 1e-6, top, count)
}

pub fn fit_b(trace: &IterationTrace, log_inv_dx_grid: &[f64]) -> Result<BFit> {
    let mut xs = Vec::with_capacity(log_inv_dx_grid.len());
    let mut bs = Vec::with_capacity(log_inv_dx_grid.len());
    for &l in log_inv_dx_grid {
        let m = holder_modulus_log(trace, l)?;
        xs.push(l);
        bs.push(effective_b(trace, &m));
    }
    let zs: Vec<f64> = xs.iter().map(|l| l.ln().ln() / l.ln()).collect();
    let n = zs.len() as f64;
    let (mz, mb) = (zs.iter().sum::<f64>() / n, bs.iter().sum::<f64>() / n);
    let szz: f64 = zs.iter().map(|z| (z - mz).powi(2)).sum();
    let szb: f64 = zs.iter().zip(&bs).map(|(z, b)| (z - mz) * (b - mb)).sum();
    let extrapolated = if szz > 0.0 { mb - szb / szz * mz } else { mb };
    Ok(BFit {
        log_inv_dx: xs,
        b: bs,
        extrapolated,
        target: leading_coefficient(trace.config.gamma, trace.config.a_exp),
    })
}

/// Closed-form leading coefficient `2^{-1/2} (4 / (3 gamma))^{1/2} (gamma/2 + 2 (A/3 + 1/6))`.
pub fn leading_coefficient(gamma: f64, a_exp: f64) -> f64 {
    (0.5f64).sqrt() * (4.0 / (3.0 * gamma)).sqrt() * (gamma / 2.0 + 2.0 * (a_exp / 3.0 + 1.0 / 6.0))
}

/// Grid minimizer of the closed-form coefficient over `[lo, hi]` with step `step`.
pub fn optimal_gamma(a_exp: f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let count = ((hi - lo) / step).round() as usize;
    (0..=count)
        .map(|i| lo + step * i as f64)
        .map(|g| (g, leading_coefficient(g, a_exp)))
        .fold((f64::NAN, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        })
}

/// Empirical `B` at the deepest grid point for each `gamma`.
pub fn gamma_sweep(config: &IterationConfig, gammas: &[f64]) -> Result<Vec<(f64, f64)>> {
    gammas
        .iter()
        .map(|&g| {
            let c = IterationConfig {
                gamma: g,
                ..*config
            };
            let t = super::trace::iterate(&c)?;
            let top = t.records[t.k_max() - 2].log_xihat;
            let m = holder_modulus_log(&t, top)?;
            Ok((g, effective_b(&t, &m)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::iterate;

    fn trace() -> IterationTrace {
        iterate(&IterationConfig {
            k_max: 60,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn boundary_stage_is_included() {
        let t = trace();
        let l = t.stage(5).log_xihat;
        let m = holder_modulus_log(&t, l).unwrap();
        assert_eq!(m.k_bar, 5);
        let m = holder_modulus_log(&t, l - 1e-9).unwrap();
        assert_eq!(m.k_bar, 4);
    }

    #[test]
    fn halving_dx_lowers_bound() {
        let t = trace();
        let a = holder_modulus(&t, 1e-30).unwrap();
        let b = holder_modulus(&t, 0.5e-30).unwrap();
        assert!(b.log_bound < a.log_bound);
    }

    #[test]
    fn too_short_trace() {
        let t = iterate(&IterationConfig {
            k_max: 5,
            ..Default::default()
        })
        .unwrap();
        assert!(matches!(
            holder_modulus_log(&t, 1e9),
            Err(LabError::TraceTooShort { .. })
        ));
        assert!(holder_modulus(&t, 0.5).is_err());
    }

    #[test]
    fn closed_form_targets() {
        assert!((leading_coefficient(4.0, 2.5) - 2.0 * (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((leading_coefficient(8.0 / 3.0, 1.5) - 4.0 / 3.0).abs() < 1e-14);
    }
}
