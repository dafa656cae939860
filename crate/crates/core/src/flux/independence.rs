//! Does the `eps -> 0` limit of the flux depend on the mollifier?

use serde::{Deserialize, Serialize};

use super::cet::Coarse;
use crate::error::{LabError, Result};
use crate::fields::{KernelId, PeriodicField, Spectral};

/// Points used by each polynomial extrapolation; more only amplifies round-off.
pub const MAX_EXTRAPOLATION_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSeries {
    pub kernel: KernelId,
    pub eps: Vec<f64>,
    pub flux: Vec<f64>,
    /// `estimates[m - 1]` extrapolates the `m` finest levels to `eps = 0`.
    pub estimates: Vec<f64>,
    pub limit: f64,
    /// `|L_M - L_{M-1}|` for the two richest estimates.
    pub cauchy_gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub tolerance: f64,
    pub series: Vec<KernelSeries>,
    pub limit_gap: f64,
    pub verdict: Verdict,
}

/// `p(0)` for the interpolating polynomial through `(x_i, y_i)` (Neville).
pub fn extrapolate_to_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let m = x.len();
    for level in 1..m {
        for i in 0..m - level {
            let (xa, xb) = (x[i], x[i + level]);
            p[i] = (xb * p[i] - xa * p[i + 1]) / (xb - xa);
        }
    }
    p[0]
}

/// Extrapolates in `eps^2`. The flux of a band-limited field is an even entire function of
/// `eps` because both kernel transforms are.
pub fn flux_series(
    sp: &Spectral,
    v: &PeriodicField,
    eps: &[f64],
    kernel: KernelId,
    tol: f64,
) -> Result<KernelSeries> {
    check_eps_grid(eps)?;
    let coarse = Coarse::new(sp, v)?;
    let flux = eps
        .iter()
        .map(|&e| Ok(coarse.level(e, kernel)?.flux()))
        .collect::<Result<Vec<_>>>()?;
    Ok(series_from(kernel, eps.to_vec(), flux, tol))
}

pub(crate) fn series_from(
    kernel: KernelId,
    eps: Vec<f64>,
    flux: Vec<f64>,
    tol: f64,
) -> KernelSeries {
    let len = eps.len();
    let estimates: Vec<f64> = (1..=len.min(MAX_EXTRAPOLATION_POINTS))
        .map(|m| {
            let x: Vec<f64> = eps[len - m..].iter().map(|e| e * e).collect();
            extrapolate_to_zero(&x, &flux[len - m..])
        })
        .collect();
    let limit = *estimates.last().expect("nonempty eps grid");
    let cauchy_gap = if estimates.len() >= 2 {
        (estimates[estimates.len() - 1] - estimates[estimates.len() - 2]).abs()
    } else {
        f64::INFINITY
    };
    KernelSeries {
        kernel,
        eps,
        flux,
        estimates,
        limit,
        cauchy_gap,
        converged: cauchy_gap < tol,
    }
}

pub(crate) fn check_eps_grid(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(LabError::Config("empty eps grid".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(LabError::Config(
            "eps grid must be strictly decreasing".into(),
        ));
    }
    match eps.iter().find(|e| !(**e > 0.0 && **e < 0.25)) {
        Some(&e) => Err(LabError::EpsOutOfRange(e)),
        None => Ok(()),
    }
}

/// Verdict from two series: both converged and within `tol` of each other is PASS,
/// both converged apart is FAIL, anything else INCONCLUSIVE.
pub fn verdict_of(series: &[KernelSeries], tol: f64) -> (Verdict, f64) {
    let lo = series.iter().map(|s| s.limit).fold(f64::INFINITY, f64::min);
    let hi = series
        .iter()
        .map(|s| s.limit)
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = hi - lo;
    let verdict = if !series.iter().all(|s| s.converged) {
        Verdict::Inconclusive
    } else if gap < tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    (verdict, gap)
}

pub fn kernel_independence_test(
    sp: &Spectral,
    v: &PeriodicField,
    eps: &[f64],
    tol: f64,
) -> Result<IndependenceReport> {
    let series = [KernelId::A, KernelId::B]
        .into_iter()
        .map(|k| flux_series(sp, v, eps, k, tol))
        .collect::<Result<Vec<_>>>()?;
    let (verdict, limit_gap) = verdict_of(&series, tol);
    Ok(IndependenceReport {
        tolerance: tol,
        series,
        limit_gap,
        verdict,
    })
}

/// `count` log-spaced scales from `coarsest` down to one grid cell.
pub fn log_eps_grid(n: usize, coarsest: f64, count: usize) -> Vec<f64> {
    let lo = (1.0 / n as f64).ln();
    let hi = coarsest.ln();
    (0..count)
        .map(|i| {
            let t = if count > 1 {
                i as f64 / (count - 1) as f64
            } else {
                0.0
            };
            (hi + t * (lo - hi)).exp()
        })
        .collect()
}
