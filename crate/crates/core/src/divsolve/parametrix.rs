//! Nonstationary-phase parametrix for `U = u omega(lambda Gamma)`.
//!
//! Each Fourier mode `m` of the profile contributes `e^{i lambda xi_m}` with `xi_m = 2 pi m . Gamma`.
//! One stage divides by the phase gradient: `q_(k) = qbar(grad xi_m) u_(k-1)` and
//! `u_(k) = -lambda^{-1} d_j q_(k)^{j.}`, so that
//! `e u_(k-1) = d_j(lambda^{-1} e q_(k)) + e u_(k)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::symbol::qbar_real_part;
use crate::error::{LabError, Result};
use crate::fields::{c2, Grid, PeriodicField, Rank, Spectral};
use crate::mikado::{invert3, TransportedFrame};

const TAU: f64 = std::f64::consts::TAU;

/// Highest order accepted by [`parametrix`].
pub const MAX_ORDER: usize = 4;

/// Phase map `Gamma = x + d(x)` with `G^a_j = d_j Gamma^a` at `c2(a, j)`.
#[derive(Debug, Clone)]
pub struct Phase {
    pub displacement: PeriodicField,
    pub grad: PeriodicField,
}

impl Phase {
    pub fn identity(grid: Grid) -> Self {
        Self {
            displacement: PeriodicField::zeros(grid, Rank::Vector),
            grad: PeriodicField::from_fn(
                grid,
                Rank::Tensor2,
                |_, c| if c % 4 == 0 { 1.0 } else { 0.0 },
            ),
        }
    }

    /// Spectral gradient of `x + d`; fails when `det G` leaves `[1/2, 2]`.
    pub fn from_displacement(sp: &Spectral, d: PeriodicField) -> Result<Self> {
        d.expect_rank(Rank::Vector)?;
        let dd = sp.gradient(&d)?;
        let mut grad = PeriodicField::zeros(d.grid(), Rank::Tensor2);
        for a in 0..3 {
            for j in 0..3 {
                let delta = if a == j { 1.0 } else { 0.0 };
                let src = dd.comp(c2(j, a));
                for (o, s) in grad.comp_mut(c2(a, j)).iter_mut().zip(src) {
                    *o = delta + s;
                }
            }
        }
        let phase = Self {
            displacement: d,
            grad,
        };
        phase.check_determinant()?;
        Ok(phase)
    }

    /// Sample `i` of a transported frame.
    pub fn from_frame(frame: &TransportedFrame, i: usize) -> Self {
        Self {
            displacement: frame.displacement[i].clone(),
            grad: frame.grad[i].clone(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.displacement.grid()
    }

    #[inline]
    pub fn grad_at(&self, idx: usize) -> [[f64; 3]; 3] {
        std::array::from_fn(|a| std::array::from_fn(|j| self.grad.comp(c2(a, j))[idx]))
    }

    pub fn check_determinant(&self) -> Result<()> {
        for idx in 0..self.grid().len() {
            let (_, det) = invert3(&self.grad_at(idx));
            if !(0.5..=2.0).contains(&det) {
                return Err(LabError::FrameDeterminant { det, index: idx });
            }
        }
        Ok(())
    }

    /// `e^{2 pi i lambda m . Gamma}` on the grid, with the `m . x` part reduced exactly.
    fn wave(&self, m: [i64; 3], lambda: u64) -> Vec<Complex64> {
        let grid = self.grid();
        let n = grid.n() as i64;
        let l = lambda as i64;
        (0..grid.len())
            .map(|idx| {
                let [i, j, k] = grid.unflatten(idx);
                let lattice =
                    (l * (m[0] * i as i64 + m[1] * j as i64 + m[2] * k as i64)).rem_euclid(n);
                let mut s = lattice as f64 / n as f64;
                for (c, mc) in m.iter().enumerate() {
                    s += (l * mc) as f64 * self.displacement.comp(c)[idx];
                }
                Complex64::from_polar(1.0, TAU * s.rem_euclid(1.0))
            })
            .collect()
    }

    /// `max_x max_j lambda |(G^T m)_j|`: the largest local frequency per axis.
    pub fn local_frequency(&self, m: [i64; 3], lambda: u64) -> f64 {
        let mut worst = 0.0_f64;
        for idx in 0..self.grid().len() {
            let g = self.grad_at(idx);
            for j in 0..3 {
                let p: f64 = (0..3).map(|a| m[a] as f64 * g[a][j]).sum();
                worst = worst.max(p.abs());
            }
        }
        worst * lambda as f64
    }
}

/// One Fourier coefficient `omega_hat(m)` of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub m: [i64; 3],
    pub re: f64,
    pub im: f64,
}

impl FourierMode {
    pub fn coeff(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Real mean-zero profile `omega(X) = sum_m omega_hat(m) e^{2 pi i m . X}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    modes: Vec<FourierMode>,
}

fn is_canonical(m: [i64; 3]) -> bool {
    m.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

fn neg(m: [i64; 3]) -> [i64; 3] {
    [-m[0], -m[1], -m[2]]
}

impl Profile {
    /// Needs no zero mode and `omega_hat(-m) = conj(omega_hat(m))`.
    pub fn new(modes: Vec<FourierMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(LabError::Config("profile has no modes".into()));
        }
        for md in &modes {
            if md.m == [0; 3] {
                return Err(LabError::Config("profile must have mean zero".into()));
            }
            if !md.re.is_finite() || !md.im.is_finite() {
                return Err(LabError::NonFinite("profile coefficient"));
            }
            let partner = modes.iter().find(|o| o.m == neg(md.m));
            let ok = partner.is_some_and(|o| (o.coeff() - md.coeff().conj()).norm() <= 1e-14);
            if !ok {
                return Err(LabError::Config(format!(
                    "profile is not real: mode {:?} lacks its conjugate",
                    md.m
                )));
            }
        }
        Ok(Self { modes })
    }

    /// `amplitude * 2 cos(2 pi m . X)`.
    pub fn cosine(m: [i64; 3], amplitude: f64) -> Result<Self> {
        Self::new(vec![
            FourierMode {
                m,
                re: amplitude,
                im: 0.0,
            },
            FourierMode {
                m: neg(m),
                re: amplitude,
                im: 0.0,
            },
        ])
    }

    /// Fourier coefficients of `f` sampled on `samples^3` points, keeping `|m|_inf <= band`
    /// and dropping coefficients below `1e-14` of the largest.
    pub fn from_fn(samples: usize, band: i64, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let grid = Grid::new(samples)?;
        if 2 * band >= samples as i64 {
            return Err(LabError::Config(format!(
                "band {band} not below the sampling Nyquist {}",
                samples / 2
            )));
        }
        let sp = Spectral::new(grid);
        let vals: Vec<f64> = (0..grid.len()).map(|idx| f(grid.point(idx))).collect();
        let spec = sp.forward(&vals);
        let scale = 1.0 / grid.len() as f64;
        let mut modes = Vec::new();
        for (idx, z) in spec.iter().enumerate() {
            let m = sp.kint(idx);
            if m == [0; 3] || m.iter().any(|c| c.abs() > band) {
                continue;
            }
            modes.push(FourierMode {
                m,
                re: z.re * scale,
                im: z.im * scale,
            });
        }
        let top = modes.iter().map(|md| md.coeff().norm()).fold(0.0, f64::max);
        if top == 0.0 {
            return Err(LabError::Config("profile vanishes on the band".into()));
        }
        modes.retain(|md| md.coeff().norm() > 1e-14 * top);
        // exact conjugate symmetry, which the FFT of real data only has to round-off
        let canon: Vec<FourierMode> = modes
            .iter()
            .copied()
            .filter(|md| is_canonical(md.m))
            .collect();
        let mut out = Vec::with_capacity(2 * canon.len());
        for md in canon {
            out.push(md);
            out.push(FourierMode {
                m: neg(md.m),
                re: md.re,
                im: -md.im,
            });
        }
        Self::new(out)
    }

    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    /// One representative of each conjugate pair.
    pub fn half(&self) -> impl Iterator<Item = &FourierMode> {
        self.modes.iter().filter(|md| is_canonical(md.m))
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.half()
            .map(|md| {
                let s =
                    TAU * (md.m[0] as f64 * x[0] + md.m[1] as f64 * x[1] + md.m[2] as f64 * x[2]);
                2.0 * (md.coeff() * Complex64::from_polar(1.0, s)).re
            })
            .sum()
    }
}

/// `U^l = u^l omega(lambda Gamma)`.
#[derive(Debug, Clone)]
pub struct OscillatoryField {
    pub amplitude: PeriodicField,
    pub profile: Profile,
    pub phase: Phase,
    pub lambda: u64,
}

impl OscillatoryField {
    pub fn new(
        amplitude: PeriodicField,
        profile: Profile,
        phase: Phase,
        lambda: u64,
    ) -> Result<Self> {
        amplitude.expect_rank(Rank::Vector)?;
        amplitude.check_compatible(&phase.displacement)?;
        if lambda == 0 {
            return Err(LabError::Config("lambda must be positive".into()));
        }
        Ok(Self {
            amplitude,
            profile,
            phase,
            lambda,
        })
    }

    /// Largest local frequency over the profile's modes.
    pub fn local_frequency(&self) -> f64 {
        self.profile
            .half()
            .map(|md| self.phase.local_frequency(md.m, self.lambda))
            .fold(0.0, f64::max)
    }

    /// Pointwise samples of `U`.
    pub fn sample(&self) -> PeriodicField {
        let grid = self.amplitude.grid();
        let mut out = PeriodicField::zeros(grid, Rank::Vector);
        for md in self.profile.half() {
            let e = self.phase.wave(md.m, self.lambda);
            let c = md.coeff();
            for idx in 0..grid.len() {
                let w = 2.0 * (c * e[idx]).re;
                for l in 0..3 {
                    out.comp_mut(l)[idx] += w * self.amplitude.comp(l)[idx];
                }
            }
        }
        out
    }
}

/// Stage amplitudes of one profile mode: `q[k-1][c2(j, l)]` for `k = 1..=D`, `u[k][l]` for `k = 0..=D`.
#[derive(Debug, Clone)]
pub struct ModeStages {
    pub m: [i64; 3],
    pub coeff: Complex64,
    pub q: Vec<Vec<Vec<Complex64>>>,
    pub u: Vec<Vec<Vec<Complex64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParametrixDiagnostics {
    pub order: usize,
    pub lambda: u64,
    pub modes: usize,
    pub local_frequency: f64,
    /// `sup |U - d_j Q^{j.} - U_(D)| / sup |U|` with the divergence taken by the chain rule.
    pub identity_defect: f64,
    /// The same defect with a fully spectral divergence of `Q`; only when `lambda` is resolved.
    pub spectral_defect: Option<f64>,
    /// `sup |U_(k)|` for `k = 0..=D`, with `U_(0) = U`.
    pub remainder_sup: Vec<f64>,
    /// `max_k lambda sup|U_(k+1)| / sup|U_(k)|`: remainders shrink with `k` for `lambda` above it.
    pub monotone_above: f64,
    pub symmetry_defect: f64,
}

#[derive(Debug, Clone)]
pub struct ParametrixResult {
    pub order: usize,
    pub source: PeriodicField,
    pub q: PeriodicField,
    pub remainder: PeriodicField,
    pub stages: Vec<ModeStages>,
    pub diagnostics: ParametrixDiagnostics,
}

impl ParametrixResult {
    /// `U_(k)` for `k <= order`, rebuilt from the stored stage amplitudes.
    pub fn stage_remainder(&self, field: &OscillatoryField, k: usize) -> Result<PeriodicField> {
        if k > self.order {
            return Err(LabError::Config(format!(
                "stage {k} beyond order {}",
                self.order
            )));
        }
        let grid = field.amplitude.grid();
        let mut out = PeriodicField::zeros(grid, Rank::Vector);
        for st in &self.stages {
            let e = field.phase.wave(st.m, field.lambda);
            for l in 0..3 {
                add_real(out.comp_mut(l), st.coeff, &e, &st.u[k][l]);
            }
        }
        Ok(out)
    }
}

/// `sum_j d_j q^{jl}` for a complex two-tensor stored at `c2(j, l)`.
fn divergence_complex(sp: &Spectral, q: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let len = sp.grid().len();
    let specs: Vec<Vec<Complex64>> = q.iter().map(|c| sp.forward_complex(c.clone())).collect();
    (0..3)
        .map(|l| {
            let mut acc = vec![Complex64::default(); len];
            for j in 0..3 {
                let s = &specs[c2(j, l)];
                for (idx, z) in acc.iter_mut().enumerate() {
                    *z += Complex64::new(0.0, sp.kvec(idx)[j]) * s[idx];
                }
            }
            sp.inverse_complex(acc)
        })
        .collect()
}

/// Accumulates `2 Re(c e f)` into a real component.
fn add_real(out: &mut [f64], c: Complex64, e: &[Complex64], f: &[Complex64]) {
    for ((o, ei), fi) in out.iter_mut().zip(e).zip(f) {
        *o += 2.0 * (c * ei * fi).re;
    }
}

/// `D` stages of the parametrix, so that `U = d_j Q^{j.} + U_(D)`.
pub fn parametrix(
    sp: &Spectral,
    field: &OscillatoryField,
    order: usize,
) -> Result<ParametrixResult> {
    if order == 0 || order > MAX_ORDER {
        return Err(LabError::Config(format!(
            "parametrix order {order} outside 1..={MAX_ORDER}"
        )));
    }
    let grid = sp.grid();
    field
        .amplitude
        .check_compatible(&PeriodicField::zeros(grid, Rank::Vector))?;
    let nyquist = (grid.n() / 2) as f64;
    let local_frequency = field.local_frequency();
    if local_frequency >= nyquist {
        return Err(LabError::Unresolved(format!(
            "local frequency {local_frequency:.2} of lambda = {} reaches the grid Nyquist {nyquist}",
            field.lambda
        )));
    }
    let len = grid.len();
    let lambda = field.lambda as f64;
    let inv_lambda = 1.0 / lambda;
    let mut q_out = PeriodicField::zeros(grid, Rank::Tensor2);
    let mut u_stage = vec![PeriodicField::zeros(grid, Rank::Vector); order + 1];
    let mut div_q = PeriodicField::zeros(grid, Rank::Vector);
    let mut stages = Vec::new();
    for md in field.profile.half() {
        let e = field.phase.wave(md.m, field.lambda);
        let c = md.coeff();
        // grad xi_m = 2 pi G^T m
        let p: Vec<[f64; 3]> = (0..len)
            .map(|idx| {
                let g = field.phase.grad_at(idx);
                std::array::from_fn(|j| TAU * (0..3).map(|a| md.m[a] as f64 * g[a][j]).sum::<f64>())
            })
            .collect();
        for &pt in &p {
            if pt.iter().map(|v| v * v).sum::<f64>() < 1e-24 {
                return Err(LabError::ZeroVector);
            }
        }
        let u0: Vec<Vec<Complex64>> = (0..3)
            .map(|l| {
                field
                    .amplitude
                    .comp(l)
                    .iter()
                    .map(|&v| Complex64::new(v, 0.0))
                    .collect()
            })
            .collect();
        let mut us = vec![u0];
        let mut qs = Vec::with_capacity(order);
        for _ in 0..order {
            let prev = us.last().expect("stage zero present");
            // qbar = -i S, so q^{jl} = -i S_a^{jl} u^a
            let mut q = vec![vec![Complex64::default(); len]; 9];
            for idx in 0..len {
                for j in 0..3 {
                    for l in j..3 {
                        let mut acc = Complex64::default();
                        for (a, ua) in prev.iter().enumerate() {
                            acc += qbar_real_part(p[idx], a, j, l) * ua[idx];
                        }
                        let v = Complex64::new(acc.im, -acc.re);
                        q[c2(j, l)][idx] = v;
                        q[c2(l, j)][idx] = v;
                    }
                }
            }
            let mut u = divergence_complex(sp, &q);
            for comp in u.iter_mut() {
                comp.iter_mut().for_each(|z| *z *= -inv_lambda);
            }
            qs.push(q);
            us.push(u);
        }
        for (k, q) in qs.iter().enumerate() {
            for comp in 0..9 {
                add_real(q_out.comp_mut(comp), c * inv_lambda, &e, &q[comp]);
            }
            // d_j(lambda^{-1} e q^{jl}) = e (i p_j q^{jl} - u_(k+1)^l)
            for l in 0..3 {
                let out = div_q.comp_mut(l);
                for idx in 0..len {
                    let mut z = Complex64::default();
                    for j in 0..3 {
                        z += Complex64::new(0.0, p[idx][j]) * q[c2(j, l)][idx];
                    }
                    z -= us[k + 1][l][idx];
                    out[idx] += 2.0 * (c * e[idx] * z).re;
                }
            }
        }
        for (k, u) in us.iter().enumerate() {
            for l in 0..3 {
                add_real(u_stage[k].comp_mut(l), c, &e, &u[l]);
            }
        }
        stages.push(ModeStages {
            m: md.m,
            coeff: c,
            q: qs,
            u: us,
        });
    }
    let source = u_stage[0].clone();
    let remainder = u_stage[order].clone();
    let scale = source.sup_norm().max(f64::MIN_POSITIVE);
    let defect = |div: &PeriodicField| -> Result<f64> {
        Ok(source.sub(div)?.sub(&remainder)?.sup_norm() / scale)
    };
    let identity_defect = defect(&div_q)?;
    let q_sym = q_out.clone().with_rank(Rank::Sym2);
    let spectral_defect = if local_frequency < nyquist / 1.5 {
        Some(defect(&sp.divergence(&q_sym)?)?)
    } else {
        None
    };
    let remainder_sup: Vec<f64> = u_stage.iter().map(|u| u.sup_norm()).collect();
    let monotone_above = remainder_sup
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 {
                lambda * w[1] / w[0]
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    let diagnostics = ParametrixDiagnostics {
        order,
        lambda: field.lambda,
        modes: stages.len(),
        local_frequency,
        identity_defect,
        spectral_defect,
        remainder_sup,
        monotone_above,
        symmetry_defect: q_out.symmetry_defect(),
    };
    Ok(ParametrixResult {
        order,
        source,
        q: q_sym,
        remainder,
        stages,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn distorted(sp: &Spectral, a: f64) -> Phase {
        let d = PeriodicField::from_fn(sp.grid(), Rank::Vector, |x, c| {
            a * (TAU * x[(c + 1) % 3] + c as f64).sin()
        });
        Phase::from_displacement(sp, d).unwrap()
    }

    fn smooth_amplitude(grid: Grid) -> PeriodicField {
        PeriodicField::from_fn(grid, Rank::Vector, |x, c| match c {
            0 => (TAU * x[1]).sin(),
            1 => (TAU * x[2]).cos() + 0.3 * (TAU * (x[0] + x[1])).sin(),
            _ => 0.5,
        })
    }

    /// `S_a^{jl}(p)` written out independently of the library formula.
    fn s_oracle(p: [f64; 3], a: usize, j: usize, l: usize) -> f64 {
        let p2 = p.iter().map(|v| v * v).sum::<f64>();
        let mut v = 0.0;
        if a == l {
            v += p[j];
        }
        if a == j {
            v += p[l];
        }
        (v - p[a] * p[j] * p[l] / p2) / p2
    }

    #[test]
    fn single_mode_on_identity_frame_matches_closed_form() {
        let grid = Grid::new(32).unwrap();
        let sp = Spectral::new(grid);
        let lambda = 3;
        let m0 = [1, 0, 0];
        let u = PeriodicField::from_fn(grid, Rank::Vector, |x, c| match c {
            0 => (TAU * x[1]).sin(),
            1 => (TAU * x[2]).cos(),
            _ => 0.5,
        });
        // d_j u^a
        let du = |x: [f64; 3], j: usize, a: usize| match (j, a) {
            (1, 0) => TAU * (TAU * x[1]).cos(),
            (2, 1) => -TAU * (TAU * x[2]).sin(),
            _ => 0.0,
        };
        let field = OscillatoryField::new(
            u.clone(),
            Profile::cosine(m0, 1.0).unwrap(),
            Phase::identity(grid),
            lambda,
        )
        .unwrap();
        let res = parametrix(&sp, &field, 1).unwrap();
        let p = [TAU, 0.0, 0.0];
        let lf = lambda as f64;
        let mut worst_q = 0.0_f64;
        let mut worst_r = 0.0_f64;
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            let sin = (TAU * lf * x[0]).sin();
            for l in 0..3 {
                for j in 0..3 {
                    let want: f64 = (0..3)
                        .map(|a| s_oracle(p, a, j, l) * u.comp(a)[idx])
                        .sum::<f64>()
                        * 2.0
                        * sin
                        / lf;
                    worst_q = worst_q.max((res.q.comp(c2(j, l))[idx] - want).abs());
                }
                let mut want = 0.0;
                for j in 0..3 {
                    for a in 0..3 {
                        want -= 2.0 * sin / lf * s_oracle(p, a, j, l) * du(x, j, a);
                    }
                }
                worst_r = worst_r.max((res.remainder.comp(l)[idx] - want).abs());
            }
        }
        assert!(worst_q < 1e-14, "Q error {worst_q:e}");
        assert!(worst_r < 1e-13, "U_(1) error {worst_r:e}");
    }

    #[test]
    fn constant_amplitude_leaves_no_remainder() {
        let grid = Grid::new(16).unwrap();
        let sp = Spectral::new(grid);
        let u = PeriodicField::from_fn(grid, Rank::Vector, |_, c| [0.3, -1.0, 2.0][c]);
        let field = OscillatoryField::new(
            u,
            Profile::cosine([1, 2, 0], 0.7).unwrap(),
            Phase::identity(grid),
            2,
        )
        .unwrap();
        let res = parametrix(&sp, &field, 1).unwrap();
        assert!(res.remainder.sup_norm() < 1e-14);
    }

    #[test]
    fn identity_holds_to_round_off_on_distorted_frames() {
        let grid = Grid::new(32).unwrap();
        let sp = Spectral::new(grid);
        let profile = Profile::new(vec![
            FourierMode {
                m: [1, 0, 0],
                re: 0.5,
                im: 0.2,
            },
            FourierMode {
                m: [-1, 0, 0],
                re: 0.5,
                im: -0.2,
            },
            FourierMode {
                m: [0, 1, -1],
                re: 0.0,
                im: 0.3,
            },
            FourierMode {
                m: [0, -1, 1],
                re: 0.0,
                im: -0.3,
            },
        ])
        .unwrap();
        for phase in [Phase::identity(grid), distorted(&sp, 0.04)] {
            let field =
                OscillatoryField::new(smooth_amplitude(grid), profile.clone(), phase, 3).unwrap();
            for d in 1..=MAX_ORDER {
                let res = parametrix(&sp, &field, d).unwrap();
                let diag = &res.diagnostics;
                assert!(
                    diag.identity_defect < 1e-11,
                    "D = {d}: {:e}",
                    diag.identity_defect
                );
                assert_eq!(diag.symmetry_defect, 0.0);
                assert!(
                    diag.spectral_defect.unwrap() < 1e-6,
                    "{:?}",
                    diag.spectral_defect
                );
            }
        }
    }

    #[test]
    fn remainder_decays_like_lambda_to_minus_order() {
        let grid = Grid::new(64).unwrap();
        let sp = Spectral::new(grid);
        let phase = distorted(&sp, 0.03);
        let profile = Profile::cosine([1, 1, 0], 0.5).unwrap();
        let lambdas = [4u64, 8, 16];
        let norms: Vec<Vec<f64>> = lambdas
            .iter()
            .map(|&l| {
                let f = OscillatoryField::new(
                    smooth_amplitude(grid),
                    profile.clone(),
                    phase.clone(),
                    l,
                )
                .unwrap();
                parametrix(&sp, &f, 3).unwrap().diagnostics.remainder_sup
            })
            .collect();
        for d in 1..=3 {
            let xs: Vec<f64> = lambdas.iter().map(|&l| l as f64).collect();
            let ys: Vec<f64> = norms.iter().map(|n| n[d]).collect();
            let slope = crate::mikado::log_log_slope(&xs, &ys);
            assert!(
                (slope + d as f64).abs() < 0.15 * d as f64,
                "D = {d}: slope {slope}"
            );
        }
    }

    #[test]
    fn remainders_shrink_above_reported_threshold() {
        let grid = Grid::new(64).unwrap();
        let sp = Spectral::new(grid);
        let phase = distorted(&sp, 0.03);
        let profile = Profile::cosine([0, 0, 1], 1.0).unwrap();
        let make = |l| {
            OscillatoryField::new(smooth_amplitude(grid), profile.clone(), phase.clone(), l)
                .unwrap()
        };
        let probe = parametrix(&sp, &make(2), 4).unwrap().diagnostics;
        let lambda = (1.5 * probe.monotone_above).ceil() as u64;
        let diag = parametrix(&sp, &make(lambda), 4).unwrap().diagnostics;
        assert!(
            diag.remainder_sup.windows(2).all(|w| w[1] <= w[0]),
            "{diag:?}"
        );
    }

    #[test]
    fn guards() {
        let grid = Grid::new(16).unwrap();
        let sp = Spectral::new(grid);
        let f = OscillatoryField::new(
            smooth_amplitude(grid),
            Profile::cosine([1, 0, 0], 1.0).unwrap(),
            Phase::identity(grid),
            8,
        )
        .unwrap();
        assert!(matches!(
            parametrix(&sp, &f, 1),
            Err(LabError::Unresolved(_))
        ));
        let g = OscillatoryField { lambda: 2, ..f };
        assert!(parametrix(&sp, &g, 0).is_err());
        assert!(parametrix(&sp, &g, MAX_ORDER + 1).is_err());
        assert!(Profile::cosine([0, 0, 0], 1.0).is_err());
        let lonely = FourierMode {
            m: [1, 0, 0],
            re: 1.0,
            im: 0.0,
        };
        assert!(Profile::new(vec![lonely]).is_err());
        let big = PeriodicField::from_fn(grid, Rank::Vector, |x, c| 0.3 * (TAU * x[c]).sin());
        assert!(matches!(
            Phase::from_displacement(&sp, big),
            Err(LabError::FrameDeterminant { .. })
        ));
    }

    #[test]
    fn profile_from_samples_recovers_coefficients() {
        let p = Profile::from_fn(8, 2, |x| {
            2.0 * (TAU * (x[0] - x[2])).cos() - 0.6 * (TAU * 2.0 * x[1]).sin()
        })
        .unwrap();
        assert_eq!(p.modes().len(), 4);
        let x = [0.1, 0.37, 0.8];
        let want = 2.0 * (TAU * (x[0] - x[2])).cos() - 0.6 * (TAU * 2.0 * x[1]).sin();
        assert!((p.eval(x) - want).abs() < 1e-14);
    }
}
