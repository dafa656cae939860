//! Tube functions `psi(X) = g(dist(X, line))` and their potentials, in closed form.
//!
//! The radial profile is `g = s lap^2 h` for the bump `h = (1 - u^2)^m`, `u = (rho - 3 r0/4) / (r0/4)`,
//! with the Laplacian taken in the cross-section plane. Then `Omega = f (x) grad lap h - grad lap h (x) f`
//! and `Omega~^{abc} = f^b d_a d_c h - f^a d_b d_c h` are explicit, supported in the same annulus, and
//! satisfy both divergence identities exactly.

use serde::{Deserialize, Serialize};

use super::directions::DirectionSet;
use super::lines::{cross_coords, LineLayout, A_PERIOD};
use crate::error::{LabError, Result};
use crate::fields::{c2, c3, PeriodicField, Rank, Spectral};
use crate::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    /// Exponent `m` of the bump `(1 - u^2)^m`; the tube function is `C^{m-5}`.
    pub exponent: u32,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self { exponent: 10 }
    }
}

/// Radial data of one tube at distance `rho` from its line.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Radial {
    /// `h, h', h'', h'''`
    pub h: [f64; 4],
    /// `(lap h)'`
    pub phi1: f64,
    pub psi: f64,
    pub psi1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r0: f64,
    pub spec: ProfileSpec,
    /// Polynomial coefficients of the bump in `u`, lowest degree first.
    coeffs: Vec<f64>,
    /// Normalization making `int psi^2 = 1` on the torus.
    pub scale: f64,
}

fn derive(p: &[f64]) -> Vec<f64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| i as f64 * c)
        .collect()
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl RadialProfile {
    pub fn new(r0: f64, spec: ProfileSpec) -> Result<Self> {
        if !(r0 > 0.0 && r0 < 0.5 * A_PERIOD) {
            return Err(LabError::Config(format!(
                "tube radius {r0} outside (0, {})",
                0.5 * A_PERIOD
            )));
        }
        if spec.exponent < 6 {
            return Err(LabError::Config(
                "profile exponent must be at least 6".into(),
            ));
        }
        let m = spec.exponent as usize;
        // (1 - u^2)^m = sum_k C(m,k) (-1)^k u^{2k}
        let mut coeffs = vec![0.0; 2 * m + 1];
        let mut binom = 1.0;
        for k in 0..=m {
            coeffs[2 * k] = if k % 2 == 0 { binom } else { -binom };
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
        let mut p = Self {
            r0,
            spec,
            coeffs,
            scale: 1.0,
        };
        let (nodes, weights) = gauss_legendre(256, r0 / 2.0, r0);
        let int: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&rho, w)| w * p.radial(rho).psi.powi(2) * rho)
            .sum();
        p.scale = 1.0 / (std::f64::consts::SQRT_2 * 2.0 * std::f64::consts::PI * int).sqrt();
        Ok(p)
    }

    /// `d^k h / d rho^k` for `k = 0..=5`, before normalization.
    fn bump_derivatives(&self, rho: f64) -> [f64; 6] {
        let u = (rho - 0.75 * self.r0) / (0.25 * self.r0);
        let du = 4.0 / self.r0;
        let mut out = [0.0; 6];
        let mut p = self.coeffs.clone();
        let mut factor = 1.0;
        for o in out.iter_mut() {
            *o = factor * horner(&p, u);
            p = derive(&p);
            factor *= du;
        }
        out
    }

    pub fn radial(&self, rho: f64) -> Radial {
        if !(rho > 0.5 * self.r0 && rho < self.r0) {
            return Radial::default();
        }
        let [h0, h1, h2, h3, h4, h5] = self.bump_derivatives(rho).map(|x| x * self.scale);
        let r = rho;
        Radial {
            h: [h0, h1, h2, h3],
            phi1: h3 + h2 / r - h1 / (r * r),
            psi: h4 + 2.0 * h3 / r - h2 / (r * r) + h1 / (r * r * r),
            psi1: h5 + 2.0 * h4 / r - 3.0 * h3 / (r * r) + 3.0 * h2 / (r * r * r)
                - 3.0 * h1 / (r * r * r * r),
        }
    }

    /// `int_{T^3} F(dist(X, line))` for a radial function on the annulus.
    pub fn torus_integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        let (nodes, weights) = gauss_legendre(256, self.r0 / 2.0, self.r0);
        let s: f64 = nodes.iter().zip(&weights).map(|(&r, w)| w * f(r) * r).sum();
        std::f64::consts::SQRT_2 * 2.0 * std::f64::consts::PI * s
    }
}

/// Values of one tube function and its potentials at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeValue {
    pub psi: f64,
    pub grad_psi: [f64; 3],
    /// `Omega^{ab}` at `c2(a, b)`.
    pub omega: [f64; 9],
    /// `Omega~^{abc}` at `c3(a, b, c)`.
    pub omega_t: [f64; 27],
}

/// Derivatives `d_m Omega~^{abc}` at index `27 m + c3(a, b, c)`.
pub type OmegaTildeGradient = [f64; 81];

/// Geometry of the unit-direction cross section and the radial data at a point.
struct Local {
    f: [f64; 3],
    n: [f64; 3],
    proj: [[f64; 3]; 3],
    rho: f64,
    radial: Radial,
}

/// Analytic tube functions for all 48 lines of a layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeFamily {
    pub layout: LineLayout,
    pub profile: RadialProfile,
}

impl TubeFamily {
    /// Tube family with separation checked against `6 r0`.
    pub fn new(layout: LineLayout, r0: f64, spec: ProfileSpec) -> Result<Self> {
        layout.validate_separation(r0)?;
        Ok(Self {
            layout,
            profile: RadialProfile::new(r0, spec)?,
        })
    }

    pub fn r0(&self) -> f64 {
        self.profile.r0
    }

    pub fn len(&self) -> usize {
        self.layout.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layout.lines.is_empty()
    }

    fn local(&self, slot: usize, x: [f64; 3]) -> Option<Local> {
        let line = &self.layout.lines[slot];
        let b = line.base();
        let [a, c] = cross_coords(line.direction, [x[0] - b[0], x[1] - b[1], x[2] - b[2]]);
        let rho = a.hypot(c);
        if !(rho > 0.5 * self.profile.r0 && rho < self.profile.r0) {
            return None;
        }
        let [u1, u2] = DirectionSet.cross_section(line.direction);
        let n = std::array::from_fn(|i| (a * u1[i] + c * u2[i]) / rho);
        let proj = std::array::from_fn(|i| std::array::from_fn(|j| u1[i] * u1[j] + u2[i] * u2[j]));
        Some(Local {
            f: DirectionSet.vector(line.direction),
            n,
            proj,
            rho,
            radial: self.profile.radial(rho),
        })
    }

    /// Whether `x` lies in the open support of tube `slot`.
    pub fn in_support(&self, slot: usize, x: [f64; 3]) -> bool {
        self.local(slot, x).is_some()
    }

    pub fn psi(&self, slot: usize, x: [f64; 3]) -> f64 {
        self.local(slot, x).map_or(0.0, |l| l.radial.psi)
    }

    pub fn eval(&self, slot: usize, x: [f64; 3]) -> TubeValue {
        let mut out = TubeValue {
            psi: 0.0,
            grad_psi: [0.0; 3],
            omega: [0.0; 9],
            omega_t: [0.0; 27],
        };
        let Some(l) = self.local(slot, x) else {
            return out;
        };
        let Local {
            f,
            n,
            proj,
            rho,
            radial,
        } = l;
        out.psi = radial.psi;
        out.grad_psi = n.map(|ni| radial.psi1 * ni);
        let dphi = n.map(|ni| radial.phi1 * ni);
        let [_, h1, h2, _] = radial.h;
        let hess: [[f64; 3]; 3] = std::array::from_fn(|i| {
            std::array::from_fn(|j| h2 * n[i] * n[j] + h1 / rho * (proj[i][j] - n[i] * n[j]))
        });
        for a in 0..3 {
            for b in 0..3 {
                out.omega[c2(a, b)] = f[b] * dphi[a] - f[a] * dphi[b];
                for c in 0..3 {
                    out.omega_t[c3(a, b, c)] = f[b] * hess[a][c] - f[a] * hess[b][c];
                }
            }
        }
        out
    }

    /// `d_m Omega~^{abc}` at `x`.
    pub fn omega_tilde_gradient(&self, slot: usize, x: [f64; 3]) -> OmegaTildeGradient {
        let mut out = [0.0; 81];
        let Some(l) = self.local(slot, x) else {
            return out;
        };
        let Local {
            f,
            n,
            proj,
            rho,
            radial,
        } = l;
        let [_, h1, h2, h3] = radial.h;
        let g1 = (h2 - h1 / rho) / rho;
        let third = |i: usize, j: usize, k: usize| {
            h3 * n[i] * n[j] * n[k]
                + g1 * (proj[i][j] * n[k] + proj[i][k] * n[j] + proj[j][k] * n[i]
                    - 3.0 * n[i] * n[j] * n[k])
        };
        for m in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        out[27 * m + c3(a, b, c)] = f[b] * third(m, a, c) - f[a] * third(m, b, c);
                    }
                }
            }
        }
        out
    }

    /// Grid samples of tube `slot` with Nyquist modes removed, mean-subtracted and scaled to unit mean square.
    pub fn sample(&self, slot: usize, sp: &Spectral) -> Result<SampledTube> {
        let grid = sp.grid();
        let points = 0.5 * self.profile.r0 * grid.n() as f64;
        if points < 8.0 {
            return Err(LabError::Unresolved(format!(
                "annulus width r0/2 = {:.4} spans {points:.2} grid points, need 8",
                0.5 * self.profile.r0
            )));
        }
        let mut psi = sp.strip_nyquist(&PeriodicField::from_fn(grid, Rank::Scalar, |x, _| {
            self.psi(slot, x)
        }));
        let mean = psi.mean(0);
        psi.comp_mut(0).iter_mut().for_each(|v| *v -= mean);
        let norm = psi.lp_norm(2.0);
        psi.scale(1.0 / norm);
        Ok(SampledTube {
            direction: DirectionSet.vector(self.layout.lines[slot].direction),
            psi,
            omega: None,
            omega_t: None,
        })
    }
}

/// A tube function on a grid together with its spectrally computed potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTube {
    pub direction: [f64; 3],
    pub psi: PeriodicField,
    pub omega: Option<PeriodicField>,
    pub omega_t: Option<PeriodicField>,
}

/// Residuals of the potential identities, relative to the size of the field on the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub orthogonality: f64,
    pub first_identity: f64,
    pub second_identity: f64,
    pub antisymmetry: f64,
    pub max_mean: f64,
}

impl SampledTube {
    /// `Omega` from the vector-potential formula and `Omega~ = grad lap^{-1} Omega`.
    pub fn build_potentials(&mut self, sp: &Spectral) -> Result<()> {
        let grid = self.psi.grid();
        let f = self.direction;
        let comps = (0..3)
            .map(|b| self.psi.comp(0).iter().map(|p| p * f[b]).collect())
            .collect();
        let y = PeriodicField::from_components(grid, Rank::Vector, comps)?;
        let omega = sp.vector_potential(&y)?;
        self.omega_t = Some(sp.second_potential(&omega)?);
        self.omega = Some(omega);
        Ok(())
    }

    pub fn report(&self, sp: &Spectral) -> Result<PotentialReport> {
        let (Some(omega), Some(omega_t)) = (&self.omega, &self.omega_t) else {
            return Err(LabError::Config("potentials not built".into()));
        };
        let f = self.direction;
        let grad = sp.gradient(&self.psi)?;
        let fdot: Vec<f64> = (0..grid_len(&self.psi))
            .map(|i| f[0] * grad.comp(0)[i] + f[1] * grad.comp(1)[i] + f[2] * grad.comp(2)[i])
            .collect();
        let sup = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let orthogonality = sup(&fdot) / grad.sup_norm();
        let div = sp.divergence(omega)?;
        let psi_sup = self.psi.sup_norm();
        let mut first = 0.0_f64;
        for b in 0..3 {
            for (d, p) in div.comp(b).iter().zip(self.psi.comp(0)) {
                first = first.max((d - p * f[b]).abs());
            }
        }
        let mut second = 0.0_f64;
        for a in 0..3 {
            for b in 0..3 {
                let mut acc = vec![0.0; grid_len(&self.psi)];
                for c in 0..3 {
                    let d = sp.derivative_real(omega_t.comp(c3(a, b, c)), c);
                    acc.iter_mut().zip(&d).for_each(|(x, y)| *x += y);
                }
                for (x, o) in acc.iter().zip(omega.comp(c2(a, b))) {
                    second = second.max((x - o).abs());
                }
            }
        }
        let max_mean = omega
            .means()
            .into_iter()
            .chain(omega_t.means())
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        Ok(PotentialReport {
            orthogonality,
            first_identity: first / psi_sup,
            second_identity: second / omega.sup_norm(),
            antisymmetry: omega.symmetry_defect(),
            max_mean,
        })
    }
}

fn grid_len(f: &PeriodicField) -> usize {
    f.grid().len()
}
