//! Assembly of the transported Mikado waves `V = sum_J V_J` over one time window.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::directions::DirectionSet;
use super::frame::TransportedFrame;
use super::lines::class_index;
use super::partition::Partition;
use super::tube::TubeFamily;
use crate::error::{LabError, Result};
use crate::fields::{c2, c3, PeriodicField, Rank, Spectral};

/// A wave index `J = ([k], f)` within the current window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveId {
    pub member: usize,
    pub direction: usize,
}

pub struct WaveBuilder<'a> {
    pub tubes: &'a TubeFamily,
    pub partition: Partition,
    pub lambda: u64,
}

/// One time sample of the assembled perturbation.
#[derive(Debug, Clone)]
pub struct WaveSample {
    /// `V = lambda^-2 d_a d_c T^{a l c}`.
    pub v: PeriodicField,
    /// Principal part `sum_J V~_J`.
    pub main: PeriodicField,
    /// `sum_J V~_J V~_J`.
    pub main_square: PeriodicField,
    /// Largest number of wave terms with nonzero `chi_J psi_J` at one grid point.
    pub max_overlap: usize,
    /// Largest `|v_J . grad psi_J| / (|v_J| |grad psi_J|)` over grid points on a tube.
    pub orthogonality: f64,
    /// Grid points lying on some tube support.
    pub hits: usize,
}

impl WaveBuilder<'_> {
    /// Every wave's potential at sample `i`, kept apart and stored sparsely.
    pub fn potentials(
        &self,
        frame: &TransportedFrame,
        i: usize,
        gamma2: &[[f64; 6]],
        sqrt_energy: f64,
    ) -> Vec<SparsePotential> {
        let grid = frame.grad[i].grid();
        let lam = self.lambda as f64;
        let mut by_wave: std::collections::BTreeMap<WaveId, Vec<(usize, [f64; 27])>> =
            Default::default();
        for idx in 0..grid.len() {
            let y = frame.label(i, idx);
            let big = y.map(|v| lam * v);
            let h = frame.inv_grad_at(i, idx);
            for (k, chi) in self.partition.active(y) {
                let member = self.partition.member_index(k);
                let class = class_index(k.map(|v| (v % 2) as u8));
                for d in 0..6 {
                    let tv = self.tubes.eval(8 * d + class, big);
                    let a = chi * sqrt_energy * gamma2[idx][d].sqrt() / (lam * lam);
                    if tv.psi == 0.0 || a == 0.0 {
                        continue;
                    }
                    let t = potential_tensor(&h, &tv.omega_t).map(|v| a * v);
                    by_wave
                        .entry(WaveId {
                            member,
                            direction: d,
                        })
                        .or_default()
                        .push((idx, t));
                }
            }
        }
        by_wave
            .into_iter()
            .map(|(wave, points)| SparsePotential { wave, points })
            .collect()
    }
}

/// Operator-norm bound `sqrt(|G|_1 |G|_inf)` maximized over the grid.
pub fn frame_stretch(frame: &TransportedFrame, i: usize) -> f64 {
    let mut worst = 0.0_f64;
    for idx in 0..frame.grad[i].grid().len() {
        let g = frame.grad_at(i, idx);
        let rows = (0..3)
            .map(|a| g[a].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let cols = (0..3)
            .map(|j| (0..3).map(|a| g[a][j].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        worst = worst.max((rows * cols).sqrt());
    }
    worst
}

impl WaveBuilder<'_> {
    /// Rejects `lambda |grad Gamma| >= n / 3`.
    pub fn check_aliasing(&self, frame: &TransportedFrame) -> Result<f64> {
        let n = frame.grad[0].grid().n() as f64;
        let stretch = (0..frame.len())
            .map(|i| frame_stretch(frame, i))
            .fold(0.0, f64::max);
        let top = self.lambda as f64 * stretch;
        if top >= n / 3.0 {
            return Err(LabError::Aliasing(format!(
                "lambda |grad Gamma| = {top:.2} reaches n/3 = {:.2}",
                n / 3.0
            )));
        }
        Ok(top)
    }

    /// Assembles sample `i`; `only` restricts to a single wave.
    pub fn assemble(
        &self,
        sp: &Spectral,
        frame: &TransportedFrame,
        i: usize,
        gamma2: &[[f64; 6]],
        sqrt_energy: f64,
        only: Option<WaveId>,
    ) -> Result<WaveSample> {
        let grid = sp.grid();
        let lam = self.lambda as f64;
        let mut t = PeriodicField::zeros(grid, Rank::Rank3);
        let mut main = PeriodicField::zeros(grid, Rank::Vector);
        let mut square = PeriodicField::zeros(grid, Rank::Sym2);
        let (mut max_overlap, mut orthogonality, mut hits) = (0usize, 0.0_f64, 0usize);
        let dirs: Vec<[f64; 3]> = (0..6).map(|d| DirectionSet.vector(d)).collect();
        for idx in 0..grid.len() {
            let y = frame.label(i, idx);
            let big = y.map(|v| lam * v);
            let h = frame.inv_grad_at(i, idx);
            let g = frame.grad_at(i, idx);
            let mut overlap = 0;
            for (k, chi) in self.partition.active(y) {
                let member = self.partition.member_index(k);
                if only.is_some_and(|w| w.member != member) {
                    continue;
                }
                let class = class_index(k.map(|v| (v % 2) as u8));
                for (d, f) in dirs.iter().enumerate() {
                    if only.is_some_and(|w| w.direction != d) {
                        continue;
                    }
                    let slot = 8 * d + class;
                    let tv = self.tubes.eval(slot, big);
                    if tv.psi == 0.0 {
                        continue;
                    }
                    overlap += 1;
                    let a = chi * sqrt_energy * gamma2[idx][d].sqrt();
                    let hf: [f64; 3] =
                        std::array::from_fn(|l| (0..3).map(|b| h[l][b] * f[b]).sum());
                    let ghf: [f64; 3] =
                        std::array::from_fn(|l| (0..3).map(|b| g[l][b] * hf[b]).sum());
                    let grad_x: [f64; 3] =
                        std::array::from_fn(|l| (0..3).map(|m| tv.grad_psi[m] * g[m][l]).sum());
                    let dot: f64 = (0..3).map(|m| ghf[m] * tv.grad_psi[m]).sum();
                    let scale = norm(hf) * norm(grad_x);
                    if scale > 0.0 {
                        orthogonality = orthogonality.max(dot.abs() / scale);
                    }
                    if a == 0.0 {
                        continue;
                    }
                    for l in 0..3 {
                        main.comp_mut(l)[idx] += a * tv.psi * hf[l];
                        for m in 0..3 {
                            square.comp_mut(c2(l, m))[idx] +=
                                a * a * tv.psi * tv.psi * hf[l] * hf[m];
                        }
                    }
                    let tj = potential_tensor(&h, &tv.omega_t);
                    for (c, v) in tj.iter().enumerate() {
                        t.comp_mut(c)[idx] += a * v;
                    }
                }
            }
            if overlap > 0 {
                hits += 1;
            }
            max_overlap = max_overlap.max(overlap);
        }
        let v = double_divergence(sp, &t, 1.0 / (lam * lam))?;
        Ok(WaveSample {
            v,
            main,
            main_square: square,
            max_overlap,
            orthogonality,
            hits,
        })
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `H^a_al H^l_be H^c_ga Omega~^{al be ga}` at `c3(a, l, c)`.
fn potential_tensor(h: &[[f64; 3]; 3], omega_t: &[f64; 27]) -> [f64; 27] {
    let mut partial = [0.0; 27];
    for al in 0..3 {
        for be in 0..3 {
            for c in 0..3 {
                partial[c3(al, be, c)] = (0..3)
                    .map(|ga| h[c][ga] * omega_t[c3(al, be, ga)])
                    .sum::<f64>();
            }
        }
    }
    let mut partial2 = [0.0; 27];
    for al in 0..3 {
        for l in 0..3 {
            for c in 0..3 {
                partial2[c3(al, l, c)] = (0..3)
                    .map(|be| h[l][be] * partial[c3(al, be, c)])
                    .sum::<f64>();
            }
        }
    }
    std::array::from_fn(|k| {
        let (a, l, c) = (k / 9, (k / 3) % 3, k % 3);
        (0..3).map(|al| h[a][al] * partial2[c3(al, l, c)]).sum()
    })
}

/// `lambda^-2 T_J` of one wave on the grid points where it is nonzero.
#[derive(Debug, Clone)]
pub struct SparsePotential {
    pub wave: WaveId,
    pub points: Vec<(usize, [f64; 27])>,
}

/// `scale d_a d_c T^{a l c}`.
pub fn double_divergence(sp: &Spectral, t: &PeriodicField, scale: f64) -> Result<PeriodicField> {
    t.expect_rank(Rank::Rank3)?;
    let grid = sp.grid();
    let mut acc = vec![vec![Complex64::default(); grid.len()]; 3];
    for a in 0..3 {
        for l in 0..3 {
            for c in 0..3 {
                let comp = t.comp(c3(a, l, c));
                if comp.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let s = sp.forward(comp);
                for (idx, z) in acc[l].iter_mut().enumerate() {
                    let k = sp.kvec(idx);
                    *z -= k[a] * k[c] * scale * s[idx];
                }
            }
        }
    }
    let comps = acc.into_iter().map(|s| sp.inverse_real(s)).collect();
    PeriodicField::from_components(grid, Rank::Vector, comps)
}

/// Slow data of one wave at a point: the scalar weight `s = chi e^{1/2} gamma`, `H = G^{-1}`, `G` and derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowJet {
    pub s: f64,
    /// `d_m s`.
    pub ds: [f64; 3],
    /// `d_m d_n s`.
    pub dds: [[f64; 3]; 3],
    /// `H^l_a`.
    pub h: [[f64; 3]; 3],
    /// `d_m H^l_a` at `[m][l][a]`.
    pub dh: [[[f64; 3]; 3]; 3],
    /// `d_m d_n H^l_a` at `[m][n][l][a]`.
    pub ddh: [[[[f64; 3]; 3]; 3]; 3],
    /// `G^a_j = d_j Gamma^a` at `[a][j]`.
    pub g: [[f64; 3]; 3],
    /// `d_m G^a_j` at `[m][a][j]`.
    pub dg: [[[f64; 3]; 3]; 3],
}

/// Coefficients of the correction `dV^l = lambda^-2 C0^l . Omega~(X) + lambda^-1 C1^l . grad Omega~(X)`.
#[derive(Debug, Clone)]
pub struct CorrectionCoefficients {
    /// `C0[27 l + c3(al, be, ga)]`.
    pub c0: Vec<f64>,
    /// `C1[81 l + 27 nu + c3(al, be, ga)]`.
    pub c1: Vec<f64>,
}

impl SlowJet {
    /// `A^{a l c}_{al be ga} = s H^a_al H^l_be H^c_ga` and its first and second derivatives.
    pub fn coefficients(&self) -> CorrectionCoefficients {
        let h = &self.h;
        let dh = &self.dh;
        let ddh = &self.ddh;
        let mut c0 = vec![0.0; 81];
        let mut c1 = vec![0.0; 243];
        for l in 0..3 {
            for al in 0..3 {
                for be in 0..3 {
                    for ga in 0..3 {
                        let mut sum0 = 0.0;
                        let mut sum1 = [0.0; 3];
                        for a in 0..3 {
                            for c in 0..3 {
                                let p = [h[a][al], h[l][be], h[c][ga]];
                                let prod = p[0] * p[1] * p[2];
                                // first derivatives of the cubic product in direction m
                                let dprod = |m: usize| {
                                    dh[m][a][al] * p[1] * p[2]
                                        + p[0] * dh[m][l][be] * p[2]
                                        + p[0] * p[1] * dh[m][c][ga]
                                };
                                let ddprod = {
                                    let (m, n) = (a, c);
                                    let dm = [dh[m][a][al], dh[m][l][be], dh[m][c][ga]];
                                    let dn = [dh[n][a][al], dh[n][l][be], dh[n][c][ga]];
                                    let dmn =
                                        [ddh[m][n][a][al], ddh[m][n][l][be], ddh[m][n][c][ga]];
                                    dmn[0] * p[1] * p[2]
                                        + p[0] * dmn[1] * p[2]
                                        + p[0] * p[1] * dmn[2]
                                        + dm[0] * dn[1] * p[2]
                                        + dm[0] * p[1] * dn[2]
                                        + dn[0] * dm[1] * p[2]
                                        + p[0] * dm[1] * dn[2]
                                        + dn[0] * p[1] * dm[2]
                                        + p[0] * dn[1] * dm[2]
                                };
                                let da_prod = dprod(a);
                                let dc_prod = dprod(c);
                                let da_a = self.ds[a] * prod + self.s * da_prod;
                                let dc_a = self.ds[c] * prod + self.s * dc_prod;
                                let dac_a = self.dds[a][c] * prod
                                    + self.ds[a] * dc_prod
                                    + self.ds[c] * da_prod
                                    + self.s * ddprod;
                                sum0 += dac_a;
                                let a_val = self.s * prod;
                                for (nu, out) in sum1.iter_mut().enumerate() {
                                    *out += dc_a * self.g[nu][a]
                                        + da_a * self.g[nu][c]
                                        + a_val * self.dg[a][nu][c];
                                }
                            }
                        }
                        c0[27 * l + c3(al, be, ga)] = sum0;
                        for nu in 0..3 {
                            c1[81 * l + 27 * nu + c3(al, be, ga)] = sum1[nu];
                        }
                    }
                }
            }
        }
        CorrectionCoefficients { c0, c1 }
    }
}

impl CorrectionCoefficients {
    /// The two parts `(C0 . Omega~, C1 . grad Omega~)` of the correction at fast data.
    pub fn parts(&self, omega_t: &[f64; 27], grad: &[f64; 81]) -> ([f64; 3], [f64; 3]) {
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        for l in 0..3 {
            a[l] = (0..27).map(|q| self.c0[27 * l + q] * omega_t[q]).sum();
            b[l] = (0..81).map(|q| self.c1[81 * l + q] * grad[q]).sum();
        }
        (a, b)
    }
}

/// Fast samples of `(Omega~, grad Omega~)` across the annulus of tube `slot`.
pub fn fast_samples(
    tubes: &TubeFamily,
    slot: usize,
    radial: usize,
    angular: usize,
) -> Vec<([f64; 27], [f64; 81])> {
    let line = tubes.layout.lines[slot];
    let base = line.base();
    let [u1, u2] = DirectionSet.cross_section(line.direction);
    let r0 = tubes.r0();
    let mut out = Vec::with_capacity(radial * angular);
    for i in 0..radial {
        let rho = r0 * (0.5 + 0.5 * (i as f64 + 0.5) / radial as f64);
        for j in 0..angular {
            let th = 2.0 * std::f64::consts::PI * j as f64 / angular as f64;
            let (s, c) = th.sin_cos();
            let x = std::array::from_fn(|q| base[q] + rho * (c * u1[q] + s * u2[q]));
            out.push((
                tubes.eval(slot, x).omega_t,
                tubes.omega_tilde_gradient(slot, x),
            ));
        }
    }
    out
}

/// Two-scale sup of the correction for each `lambda`, decoupling slow points and fast tube samples.
pub fn correction_sup(
    jets: &[CorrectionCoefficients],
    fast: &[([f64; 27], [f64; 81])],
    lambdas: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0_f64; lambdas.len()];
    for c in jets {
        for (om, grad) in fast {
            let (a, b) = c.parts(om, grad);
            for (o, &lam) in out.iter_mut().zip(lambdas) {
                let v = norm(std::array::from_fn(|l| a[l] / (lam * lam) + b[l] / lam));
                *o = o.max(v);
            }
        }
    }
    out
}
