//! Per-scale flux tables with the Besov bound and the kernel-independence verdict.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::besov::{besov_norms, BesovEstimate, ShiftSet};
use super::cet::{Coarse, HolderCheck};
use super::independence::{check_eps_grid, series_from, verdict_of, IndependenceReport};
use crate::error::{LabError, Result};
use crate::fields::{KernelId, PeriodicField, Spectral};
use crate::mikado::log_log_slope;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxConfig {
    /// Strictly decreasing mollification scales in `(0, 1/4)`.
    pub eps: Vec<f64>,
    pub kernels: Vec<KernelId>,
    /// Integrability of the density diagnostics, `> 3`.
    pub r: f64,
    pub shift_magnitudes: usize,
    /// Cauchy and agreement tolerance of the independence test.
    pub tolerance: f64,
    /// Constant `C` in `|D_eps|_{r/3} <= C |v|^3_B`, from `calibrate_bound`.
    pub bound_constant: Option<f64>,
}

impl Default for FluxConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.2, 0.1, 0.05, 0.025, 0.0125],
            kernels: vec![KernelId::A, KernelId::B],
            r: 4.0,
            shift_magnitudes: 16,
            tolerance: 1e-8,
            bound_constant: None,
        }
    }
}

impl FluxConfig {
    pub fn validate(&self) -> Result<()> {
        check_eps_grid(&self.eps)?;
        if self.kernels.is_empty() {
            return Err(LabError::Config("no kernels".into()));
        }
        if !(self.r > 3.0) || !self.r.is_finite() {
            return Err(LabError::Config(format!("r = {} must exceed 3", self.r)));
        }
        if self.shift_magnitudes == 0 {
            return Err(LabError::Config("need at least one shift magnitude".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(LabError::Config("tolerance must be positive".into()));
        }
        if let Some(c) = self.bound_constant {
            if !(c > 0.0) || !c.is_finite() {
                return Err(LabError::Config(format!(
                    "bound constant {c} must be positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxRow {
    pub kernel: KernelId,
    pub eps: f64,
    pub flux: f64,
    /// `|D_eps|_{L^{r/3}}`
    pub density_norm: f64,
    pub density_sup: f64,
    pub stress_sup: f64,
    pub holder: HolderCheck,
    /// `|D_eps|_{L^{r/3}} / |v|^3_B`
    pub bound_ratio: f64,
}

/// Least-squares slopes of `log |.|` against `log eps`; `None` when a value is at round-off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedOrders {
    pub kernel: KernelId,
    pub flux: Option<f64>,
    pub density_norm: Option<f64>,
    pub density_sup: Option<f64>,
    pub stress_sup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub eps: Vec<f64>,
    pub r: f64,
    pub kernels: Vec<KernelId>,
    pub velocity_sup: f64,
    pub rows: Vec<FluxRow>,
    /// `B^{1/3}_{r,inf}` estimate, lower bound over the sampled shifts.
    pub besov: BesovEstimate,
    /// `B^{1/3}_{3,inf}` estimate used for the flux bound.
    pub besov3: BesovEstimate,
    pub orders: Vec<FittedOrders>,
    pub holder_all: bool,
    pub max_bound_ratio: f64,
    pub bound_constant: Option<f64>,
    pub bound_holds: Option<bool>,
    /// Largest `|T_eps| / |v|^3_{B_3}` over the sweep.
    pub flux_ratio: f64,
    pub independence: Option<IndependenceReport>,
}

/// Magnitudes below this times the natural scale count as zero when fitting orders.
const ORDER_FLOOR: f64 = 1e-13;

fn order(eps: &[f64], vals: &[f64], scale: f64) -> Option<f64> {
    if eps.len() < 2 || vals.iter().any(|v| !(v.abs() > ORDER_FLOOR * scale)) {
        return None;
    }
    let abs: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    Some(log_log_slope(eps, &abs))
}

pub fn flux_report(sp: &Spectral, v: &PeriodicField, cfg: &FluxConfig) -> Result<FluxReport> {
    cfg.validate()?;
    let n = v.grid().n();
    let shifts = ShiftSet::log_spaced(n, cfg.shift_magnitudes);
    let mut est = besov_norms(sp, v, &[cfg.r, 3.0], 1.0 / 3.0, &shifts)?;
    let besov3 = est.pop().expect("two exponents");
    let besov = est.pop().expect("two exponents");
    let coarse = Coarse::new(sp, v)?;
    let cube = besov.norm.powi(3);
    let cube3 = besov3.norm.powi(3);
    let ratio = |x: f64, d: f64| if d > 0.0 { x / d } else { 0.0 };
    let vsup = v.sup_norm();
    let scale = vsup.powi(3).max(f64::MIN_POSITIVE);

    let mut rows = Vec::new();
    let mut orders = Vec::new();
    let mut series = Vec::new();
    for &kernel in &cfg.kernels {
        let start = rows.len();
        for &eps in &cfg.eps {
            let level = coarse.level(eps, kernel)?;
            let density = level.density();
            let density_norm = density.lp_norm(cfg.r / 3.0);
            rows.push(FluxRow {
                kernel,
                eps,
                flux: level.flux(),
                density_norm,
                density_sup: density.sup_norm(),
                stress_sup: level.stress.sup_norm(),
                holder: level.holder(cfg.r),
                bound_ratio: ratio(density_norm, cube),
            });
        }
        let mine = &rows[start..];
        let col = |f: fn(&FluxRow) -> f64| mine.iter().map(f).collect::<Vec<_>>();
        orders.push(FittedOrders {
            kernel,
            flux: order(&cfg.eps, &col(|r| r.flux), scale),
            density_norm: order(&cfg.eps, &col(|r| r.density_norm), scale),
            density_sup: order(&cfg.eps, &col(|r| r.density_sup), scale),
            stress_sup: order(&cfg.eps, &col(|r| r.stress_sup), vsup * vsup),
        });
        series.push(series_from(
            kernel,
            cfg.eps.clone(),
            col(|r| r.flux),
            cfg.tolerance,
        ));
    }
    let independence = (cfg.kernels.len() >= 2).then(|| {
        let (verdict, limit_gap) = verdict_of(&series, cfg.tolerance);
        IndependenceReport {
            tolerance: cfg.tolerance,
            series,
            limit_gap,
            verdict,
        }
    });
    let max_bound_ratio = rows.iter().map(|r| r.bound_ratio).fold(0.0, f64::max);
    let flux_ratio = rows
        .iter()
        .map(|r| ratio(r.flux.abs(), cube3))
        .fold(0.0, f64::max);
    Ok(FluxReport {
        eps: cfg.eps.clone(),
        r: cfg.r,
        kernels: cfg.kernels.clone(),
        velocity_sup: vsup,
        holder_all: rows.iter().all(|r| r.holder.holds),
        bound_holds: cfg.bound_constant.map(|c| max_bound_ratio <= c),
        bound_constant: cfg.bound_constant,
        max_bound_ratio,
        flux_ratio,
        rows,
        besov,
        besov3,
        orders,
        independence,
    })
}

/// `C = max_eps |D_eps|_{r/3} / |v|^3_B` on a reference field, to be reused on others.
pub fn calibrate_bound(sp: &Spectral, reference: &PeriodicField, cfg: &FluxConfig) -> Result<f64> {
    let cfg = FluxConfig {
        bound_constant: None,
        ..cfg.clone()
    };
    Ok(flux_report(sp, reference, &cfg)?.max_bound_ratio)
}

impl FluxReport {
    pub const CSV_HEADER: &'static str = "kernel,eps,flux,density_norm,density_sup,stress_sup,grad_norm,stress_norm,holder_holds,bound_ratio";

    /// One row per `(kernel, eps)` in round-trip float format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e}",
                r.kernel.name(),
                r.eps,
                r.flux,
                r.density_norm,
                r.density_sup,
                r.stress_sup,
                r.holder.grad_norm,
                r.holder.stress_norm,
                r.holder.holds,
                r.bound_ratio
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Largest `|T_eps|` in the table.
    pub fn max_abs_flux(&self) -> f64 {
        self.rows.iter().map(|r| r.flux.abs()).fold(0.0, f64::max)
    }
}
