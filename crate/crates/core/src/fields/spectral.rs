//! FFT-backed calculus on the periodic grid.
//!
//! Derivatives use the effective wave vector `2 pi k` with the Nyquist component zeroed, and every
//! multiplier below uses the same vector, so identities such as `div grad = laplacian` hold exactly in
//! floating point up to round-off. Modes whose effective wave vector vanishes (the mean mode and the
//! seven pure Nyquist corners) are annihilated by the inverse operators.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{c2, c3, PeriodicField, Rank};
use super::grid::Grid;
use super::kernel::{KernelId, KernelTransform};
use crate::divsolve::qbar_real_part;
use crate::error::{LabError, Result};

const MEAN_TOL: f64 = 1e-11;

pub struct Spectral {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    keff: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("n", &self.grid.n())
            .finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let keff = (0..n)
            .map(|i| {
                if grid.is_nyquist(i) {
                    0.0
                } else {
                    2.0 * PI * grid.wavenumber(i) as f64
                }
            })
            .collect();
        Self {
            grid,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            keff,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Effective wave vector at a flat spectral index.
    #[inline]
    pub fn kvec(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.grid.unflatten(idx);
        [self.keff[i], self.keff[j], self.keff[k]]
    }

    /// Integer wave vector at a flat spectral index, Nyquist reported as `+n/2`.
    #[inline]
    pub fn kint(&self, idx: usize) -> [i64; 3] {
        let [i, j, k] = self.grid.unflatten(idx);
        [
            self.grid.wavenumber(i),
            self.grid.wavenumber(j),
            self.grid.wavenumber(k),
        ]
    }

    #[inline]
    pub fn has_nyquist(&self, idx: usize) -> bool {
        let [i, j, k] = self.grid.unflatten(idx);
        self.grid.is_nyquist(i) || self.grid.is_nyquist(j) || self.grid.is_nyquist(k)
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.grid.n();
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        let mut block = vec![Complex64::default(); n * n];
        // second axis: per plane of constant third index
        for k in 0..n {
            let plane = &mut buf[k * n * n..(k + 1) * n * n];
            for j in 0..n {
                for i in 0..n {
                    block[i * n + j] = plane[i + n * j];
                }
            }
            plan.process_with_scratch(&mut block, &mut scratch);
            for j in 0..n {
                for i in 0..n {
                    plane[i + n * j] = block[i * n + j];
                }
            }
        }
        // third axis: per plane of constant second index
        for j in 0..n {
            for k in 0..n {
                for i in 0..n {
                    block[i * n + k] = buf[i + n * (j + n * k)];
                }
            }
            plan.process_with_scratch(&mut block, &mut scratch);
            for k in 0..n {
                for i in 0..n {
                    buf[i + n * (j + n * k)] = block[i * n + k];
                }
            }
        }
        if inverse {
            let s = 1.0 / self.grid.len() as f64;
            buf.iter_mut().for_each(|z| *z *= s);
        }
    }

    pub fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    pub fn forward_complex(&self, mut buf: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut buf, false);
        buf
    }

    pub fn inverse_complex(&self, mut buf: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut buf, true);
        buf
    }

    pub fn inverse_real(&self, buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse_complex(buf)
            .into_iter()
            .map(|z| z.re)
            .collect()
    }

    /// Applies a per-mode multiplier `m(idx)` to a real component.
    pub fn apply(&self, data: &[f64], m: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let mut spec = self.forward(data);
        for (idx, z) in spec.iter_mut().enumerate() {
            *z *= m(idx);
        }
        self.inverse_real(spec)
    }

    pub fn derivative_real(&self, data: &[f64], axis: usize) -> Vec<f64> {
        self.apply(data, |idx| Complex64::new(0.0, self.kvec(idx)[axis]))
    }

    pub fn derivative_complex(&self, data: &[Complex64], axis: usize) -> Vec<Complex64> {
        let mut spec = self.forward_complex(data.to_vec());
        for (idx, z) in spec.iter_mut().enumerate() {
            *z *= Complex64::new(0.0, self.kvec(idx)[axis]);
        }
        self.inverse_complex(spec)
    }

    /// Derivative of every component along `axis`.
    pub fn derivative(&self, f: &PeriodicField, axis: usize) -> PeriodicField {
        let comps = (0..f.ncomp())
            .map(|c| self.derivative_real(f.comp(c), axis))
            .collect();
        PeriodicField::from_components(f.grid(), f.rank(), comps).expect("shape preserved")
    }

    /// `grad s` for a scalar, or the full gradient `d_j v^l` (stored at `c2(j, l)`) for a vector.
    pub fn gradient(&self, f: &PeriodicField) -> Result<PeriodicField> {
        match f.rank() {
            Rank::Scalar => {
                let comps = (0..3).map(|a| self.derivative_real(f.comp(0), a)).collect();
                PeriodicField::from_components(f.grid(), Rank::Vector, comps)
            }
            Rank::Vector => {
                let mut out = PeriodicField::zeros(f.grid(), Rank::Tensor2);
                for l in 0..3 {
                    let spec = self.forward(f.comp(l));
                    for j in 0..3 {
                        let mut s = spec.clone();
                        for (idx, z) in s.iter_mut().enumerate() {
                            *z *= Complex64::new(0.0, self.kvec(idx)[j]);
                        }
                        out.comp_mut(c2(j, l))
                            .copy_from_slice(&self.inverse_real(s));
                    }
                }
                Ok(out)
            }
            _ => Err(LabError::RankMismatch {
                expected: "scalar or vector",
                got: f.rank().name(),
            }),
        }
    }

    /// `d_j v^j` for a vector, or `d_j R^{jl}` for a two-tensor.
    pub fn divergence(&self, f: &PeriodicField) -> Result<PeriodicField> {
        match f.rank() {
            Rank::Vector => {
                let mut spec = vec![Complex64::default(); self.grid.len()];
                for j in 0..3 {
                    let s = self.forward(f.comp(j));
                    for (idx, z) in spec.iter_mut().enumerate() {
                        *z += Complex64::new(0.0, self.kvec(idx)[j]) * s[idx];
                    }
                }
                PeriodicField::from_data(f.grid(), Rank::Scalar, self.inverse_real(spec))
            }
            Rank::Sym2 | Rank::Antisym2 | Rank::Tensor2 => {
                let mut comps = Vec::with_capacity(3);
                for l in 0..3 {
                    let mut spec = vec![Complex64::default(); self.grid.len()];
                    for j in 0..3 {
                        let s = self.forward(f.comp(c2(j, l)));
                        for (idx, z) in spec.iter_mut().enumerate() {
                            *z += Complex64::new(0.0, self.kvec(idx)[j]) * s[idx];
                        }
                    }
                    comps.push(self.inverse_real(spec));
                }
                PeriodicField::from_components(f.grid(), Rank::Vector, comps)
            }
            _ => Err(LabError::RankMismatch {
                expected: "vector or two-tensor",
                got: f.rank().name(),
            }),
        }
    }

    pub fn laplacian(&self, f: &PeriodicField) -> PeriodicField {
        let comps = (0..f.ncomp())
            .map(|c| {
                self.apply(f.comp(c), |idx| {
                    let k = self.kvec(idx);
                    Complex64::new(-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]), 0.0)
                })
            })
            .collect();
        PeriodicField::from_components(f.grid(), f.rank(), comps).expect("shape preserved")
    }

    pub fn check_zero_mean(&self, f: &PeriodicField) -> Result<()> {
        let scale = f.sup_norm().max(f64::MIN_POSITIVE);
        for c in 0..f.ncomp() {
            let mean = f.mean(c);
            if mean.abs() > MEAN_TOL * scale {
                return Err(LabError::NonzeroMean { component: c, mean });
            }
        }
        Ok(())
    }

    fn inv_lap_symbol(&self, idx: usize) -> f64 {
        let k = self.kvec(idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            0.0
        } else {
            -1.0 / k2
        }
    }

    /// Componentwise inverse Laplacian of a zero-mean field.
    pub fn inverse_laplacian(&self, f: &PeriodicField) -> Result<PeriodicField> {
        self.check_zero_mean(f)?;
        let comps = (0..f.ncomp())
            .map(|c| {
                self.apply(f.comp(c), |idx| {
                    Complex64::new(self.inv_lap_symbol(idx), 0.0)
                })
            })
            .collect();
        PeriodicField::from_components(f.grid(), f.rank(), comps)
    }

    /// `Omega^{ab} = d_a lap^{-1} y^b - d_b lap^{-1} y^a`.
    pub fn vector_potential(&self, y: &PeriodicField) -> Result<PeriodicField> {
        y.expect_rank(Rank::Vector)?;
        self.check_zero_mean(y)?;
        let specs: Vec<Vec<Complex64>> = (0..3).map(|b| self.forward(y.comp(b))).collect();
        let mut out = PeriodicField::zeros(y.grid(), Rank::Antisym2);
        for a in 0..3 {
            for b in (a + 1)..3 {
                let mut s = vec![Complex64::default(); self.grid.len()];
                for (idx, z) in s.iter_mut().enumerate() {
                    let k = self.kvec(idx);
                    let m = Complex64::new(0.0, self.inv_lap_symbol(idx));
                    *z = m * (k[a] * specs[b][idx] - k[b] * specs[a][idx]);
                }
                let vals = self.inverse_real(s);
                out.comp_mut(c2(a, b)).copy_from_slice(&vals);
                let neg: Vec<f64> = vals.iter().map(|v| -v).collect();
                out.comp_mut(c2(b, a)).copy_from_slice(&neg);
            }
        }
        Ok(out)
    }

    /// `d_c lap^{-1} Omega^{ab}` as a rank-3 field indexed `c3(a, b, c)`.
    pub fn second_potential(&self, omega: &PeriodicField) -> Result<PeriodicField> {
        omega.expect_rank(Rank::Antisym2)?;
        self.check_zero_mean(omega)?;
        let mut out = PeriodicField::zeros(omega.grid(), Rank::Rank3);
        for a in 0..3 {
            for b in 0..3 {
                if a == b {
                    continue;
                }
                let spec = self.forward(omega.comp(c2(a, b)));
                for c in 0..3 {
                    let mut s = spec.clone();
                    for (idx, z) in s.iter_mut().enumerate() {
                        *z *= Complex64::new(0.0, self.kvec(idx)[c] * self.inv_lap_symbol(idx));
                    }
                    out.comp_mut(c3(a, b, c))
                        .copy_from_slice(&self.inverse_real(s));
                }
            }
        }
        Ok(out)
    }

    /// Symmetric `R` with `d_j R^{jl} = U^l` for zero-mean `U`.
    pub fn anti_divergence_sym(&self, u: &PeriodicField) -> Result<PeriodicField> {
        u.expect_rank(Rank::Vector)?;
        self.check_zero_mean(u)?;
        let specs: Vec<Vec<Complex64>> = (0..3).map(|a| self.forward(u.comp(a))).collect();
        let mut out = PeriodicField::zeros(u.grid(), Rank::Sym2);
        for j in 0..3 {
            for l in j..3 {
                let mut s = vec![Complex64::default(); self.grid.len()];
                for (idx, z) in s.iter_mut().enumerate() {
                    let k = self.kvec(idx);
                    if k == [0.0; 3] {
                        continue;
                    }
                    // qbar = -i * real part
                    let mut acc = Complex64::default();
                    for (a, spec) in specs.iter().enumerate() {
                        acc += qbar_real_part(k, a, j, l) * spec[idx];
                    }
                    *z = Complex64::new(acc.im, -acc.re);
                }
                let vals = self.inverse_real(s);
                out.comp_mut(c2(j, l)).copy_from_slice(&vals);
                if j != l {
                    out.comp_mut(c2(l, j)).copy_from_slice(&vals);
                }
            }
        }
        Ok(out)
    }

    /// Zero-mean `p` with `lap p = d_j d_l (R^{jl} - v^j v^l)`.
    pub fn pressure_solve(
        &self,
        v: &PeriodicField,
        r: Option<&PeriodicField>,
    ) -> Result<PeriodicField> {
        v.expect_rank(Rank::Vector)?;
        let mut src = PeriodicField::outer(v, v)?;
        src.scale(-1.0);
        if let Some(r) = r {
            r.expect_rank(Rank::Sym2)?;
            src.add_assign(r)?;
        }
        let mut spec = vec![Complex64::default(); self.grid.len()];
        for j in 0..3 {
            for l in 0..3 {
                let s = self.forward(src.comp(c2(j, l)));
                for (idx, z) in spec.iter_mut().enumerate() {
                    let k = self.kvec(idx);
                    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                    if k2 > 0.0 {
                        *z += s[idx] * (k[j] * k[l] / k2);
                    }
                }
            }
        }
        PeriodicField::from_data(v.grid(), Rank::Scalar, self.inverse_real(spec))
    }

    /// Convolution with `eps^{-3} eta(h / eps)`.
    pub fn mollify(&self, f: &PeriodicField, eps: f64, kernel: KernelId) -> Result<PeriodicField> {
        if !(eps > 0.0 && eps < 0.25) {
            return Err(LabError::EpsOutOfRange(eps));
        }
        let table = self.kernel_table(eps, kernel);
        let comps = (0..f.ncomp())
            .map(|c| {
                self.apply(f.comp(c), |idx| {
                    Complex64::new(table[self.k2_int(idx)], 0.0)
                })
            })
            .collect();
        PeriodicField::from_components(f.grid(), f.rank(), comps)
    }

    #[inline]
    fn k2_int(&self, idx: usize) -> usize {
        let k = self.kint(idx);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as usize
    }

    /// Kernel transform cached by integer `|k|^2`.
    pub fn kernel_table(&self, eps: f64, kernel: KernelId) -> Vec<f64> {
        let t = KernelTransform::new(kernel);
        let h = self.grid.n() / 2;
        (0..=3 * h * h)
            .map(|k2| t.eval(eps * 2.0 * PI * (k2 as f64).sqrt()))
            .collect()
    }

    /// Translation of the trigonometric interpolant, `out(x) = f(x - h)`, Nyquist modes dropped.
    pub fn translate(&self, f: &PeriodicField, h: [f64; 3]) -> PeriodicField {
        let comps = (0..f.ncomp())
            .map(|c| {
                self.apply(f.comp(c), |idx| {
                    if self.has_nyquist(idx) {
                        return Complex64::default();
                    }
                    let k = self.kvec(idx);
                    Complex64::from_polar(1.0, -(k[0] * h[0] + k[1] * h[1] + k[2] * h[2]))
                })
            })
            .collect();
        PeriodicField::from_components(f.grid(), f.rank(), comps).expect("shape preserved")
    }

    /// Removes every mode with a Nyquist component, the part of a field no derivative can see.
    pub fn strip_nyquist(&self, f: &PeriodicField) -> PeriodicField {
        self.translate(f, [0.0; 3])
    }

    /// Keeps modes with every `|k_i| < n/3`.
    pub fn dealias(&self, f: &PeriodicField) -> PeriodicField {
        let cut = self.grid.n() as i64 / 3;
        let comps = (0..f.ncomp())
            .map(|c| {
                self.apply(f.comp(c), |idx| {
                    let k = self.kint(idx);
                    if k.iter().all(|&ki| ki.abs() < cut) {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::default()
                    }
                })
            })
            .collect();
        PeriodicField::from_components(f.grid(), f.rank(), comps).expect("shape preserved")
    }

    /// Largest spectral coefficient magnitude at or above wavenumber `kmin` in any axis, relative to the largest.
    pub fn tail_fraction(&self, f: &PeriodicField, kmin: i64) -> f64 {
        let mut tail = 0.0_f64;
        let mut top = 0.0_f64;
        for c in 0..f.ncomp() {
            let s = self.forward(f.comp(c));
            for (idx, z) in s.iter().enumerate() {
                let k = self.kint(idx);
                let m = z.norm();
                top = top.max(m);
                if k.iter().any(|ki| ki.abs() >= kmin) {
                    tail = tail.max(m);
                }
            }
        }
        if top == 0.0 {
            0.0
        } else {
            tail / top
        }
    }
}
