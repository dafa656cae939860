//! Commutator stress `R_eps = eta_eps * (v v) - v_eps v_eps` and the flux it carries.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{c2, compensated_sum, KernelId, PeriodicField, Rank, Spectral};

/// Spectra of `v` and `v v`, shared by every `(eps, kernel)` level.
pub struct Coarse<'a> {
    sp: &'a Spectral,
    v_hat: Vec<Vec<Complex64>>,
    /// `(v^j v^l)^` at `c2(j, l)` for `j <= l`.
    vv_hat: Vec<Option<Vec<Complex64>>>,
}

/// One coarse-graining level of a velocity field.
#[derive(Debug, Clone)]
pub struct CoarseLevel {
    pub eps: f64,
    pub kernel: KernelId,
    pub v_eps: PeriodicField,
    /// `d_j v_eps^l` at `c2(j, l)`.
    pub grad: PeriodicField,
    pub stress: PeriodicField,
}

impl<'a> Coarse<'a> {
    pub fn new(sp: &'a Spectral, v: &PeriodicField) -> Result<Self> {
        v.expect_rank(Rank::Vector)?;
        if v.grid() != sp.grid() {
            return Err(LabError::GridMismatch(v.grid().n(), sp.grid().n()));
        }
        let len = v.grid().len();
        let v_hat: Vec<Vec<Complex64>> = (0..3).map(|c| sp.forward(v.comp(c))).collect();
        let mut vv_hat = vec![None; 9];
        for j in 0..3 {
            for l in j..3 {
                let prod: Vec<f64> = (0..len).map(|i| v.comp(j)[i] * v.comp(l)[i]).collect();
                vv_hat[c2(j, l)] = Some(sp.forward(&prod));
            }
        }
        Ok(Self { sp, v_hat, vv_hat })
    }

    pub fn level(&self, eps: f64, kernel: KernelId) -> Result<CoarseLevel> {
        if !(eps > 0.0 && eps < 0.25) {
            return Err(LabError::EpsOutOfRange(eps));
        }
        let sp = self.sp;
        let grid = sp.grid();
        let table = sp.kernel_table(eps, kernel);
        let eta: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let k = sp.kint(idx);
                table[(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as usize]
            })
            .collect();
        let filtered: Vec<Vec<Complex64>> = self
            .v_hat
            .iter()
            .map(|s| s.iter().zip(&eta).map(|(z, e)| z * e).collect())
            .collect();
        let v_eps = PeriodicField::from_components(
            grid,
            Rank::Vector,
            filtered
                .iter()
                .map(|s| sp.inverse_real(s.clone()))
                .collect(),
        )?;
        let mut grad = PeriodicField::zeros(grid, Rank::Tensor2);
        for (l, s) in filtered.iter().enumerate() {
            for j in 0..3 {
                let d: Vec<Complex64> = s
                    .iter()
                    .enumerate()
                    .map(|(idx, z)| Complex64::new(0.0, sp.kvec(idx)[j]) * z)
                    .collect();
                grad.comp_mut(c2(j, l)).copy_from_slice(&sp.inverse_real(d));
            }
        }
        let mut stress = PeriodicField::zeros(grid, Rank::Sym2);
        for j in 0..3 {
            for l in j..3 {
                let s = self.vv_hat[c2(j, l)]
                    .as_ref()
                    .expect("upper triangle stored");
                let smooth = sp.inverse_real(s.iter().zip(&eta).map(|(z, e)| z * e).collect());
                let vals: Vec<f64> = smooth
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a - v_eps.comp(j)[i] * v_eps.comp(l)[i])
                    .collect();
                stress.comp_mut(c2(j, l)).copy_from_slice(&vals);
                if j != l {
                    stress.comp_mut(c2(l, j)).copy_from_slice(&vals);
                }
            }
        }
        Ok(CoarseLevel {
            eps,
            kernel,
            v_eps,
            grad,
            stress,
        })
    }
}

impl CoarseLevel {
    /// Pointwise `d_j v_eps^l R_eps^{jl}`.
    pub fn density(&self) -> PeriodicField {
        let grid = self.grad.grid();
        let vals = (0..grid.len())
            .map(|idx| {
                (0..9)
                    .map(|c| self.grad.comp(c)[idx] * self.stress.comp(c)[idx])
                    .sum()
            })
            .collect();
        PeriodicField::from_data(grid, Rank::Scalar, vals).expect("one value per point")
    }

    /// `T_eps = int d_j v_eps^l R_eps^{jl} dx`.
    pub fn flux(&self) -> f64 {
        let len = self.grad.grid().len();
        compensated_sum((0..len).map(|idx| {
            (0..9)
                .map(|c| self.grad.comp(c)[idx] * self.stress.comp(c)[idx])
                .sum::<f64>()
        })) / len as f64
    }

    /// The Hölder step `|D|_{r/3} <= |grad v_eps|_r |R_eps|_{r/2}` with Frobenius magnitudes.
    pub fn holder(&self, r: f64) -> HolderCheck {
        let lhs = self.density().lp_norm(r / 3.0);
        let grad_norm = self.grad.lp_norm(r);
        let stress_norm = self.stress.lp_norm(r / 2.0);
        HolderCheck {
            lhs,
            grad_norm,
            stress_norm,
            holds: lhs <= grad_norm * stress_norm * (1.0 + 1e-12),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub lhs: f64,
    pub grad_norm: f64,
    pub stress_norm: f64,
    pub holds: bool,
}

pub fn cet_stress(
    sp: &Spectral,
    v: &PeriodicField,
    eps: f64,
    kernel: KernelId,
) -> Result<PeriodicField> {
    Ok(Coarse::new(sp, v)?.level(eps, kernel)?.stress)
}

pub fn trilinear_flux(sp: &Spectral, v: &PeriodicField, eps: f64, kernel: KernelId) -> Result<f64> {
    Ok(Coarse::new(sp, v)?.level(eps, kernel)?.flux())
}

/// `d_j v_eps^l R_eps^{jl}`; the pressure does not enter this form of the density.
pub fn duchon_robert_density(
    sp: &Spectral,
    v: &PeriodicField,
    eps: f64,
    kernel: KernelId,
) -> Result<PeriodicField> {
    Ok(Coarse::new(sp, v)?.level(eps, kernel)?.density())
}
