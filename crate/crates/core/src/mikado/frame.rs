//! Back-to-labels map of the coarse flow, transported by semi-Lagrangian steps.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{c2, Grid, PeriodicField, Rank, Spectral};

/// Periodic tricubic Lagrange interpolation of several components sharing one stencil.
pub struct Interpolator {
    grid: Grid,
}

#[inline]
fn cubic_weights(t: f64) -> [f64; 4] {
    // nodes at -1, 0, 1, 2
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

impl Interpolator {
    pub fn new(grid: Grid) -> Self {
        Self { grid }
    }

    /// Values of `comps` at the point `y` (any representative).
    pub fn eval<const C: usize>(&self, comps: [&[f64]; C], y: [f64; 3]) -> [f64; C] {
        let n = self.grid.n();
        let nf = n as f64;
        let mut idx = [[0usize; 4]; 3];
        let mut w = [[0.0; 4]; 3];
        for a in 0..3 {
            let s = (y[a] * nf).rem_euclid(nf);
            let i0 = s.floor();
            w[a] = cubic_weights(s - i0);
            let i0 = i0 as i64;
            for (m, slot) in idx[a].iter_mut().enumerate() {
                *slot = (i0 - 1 + m as i64).rem_euclid(n as i64) as usize;
            }
        }
        let mut out = [0.0; C];
        for (mk, &k) in idx[2].iter().enumerate() {
            for (mj, &j) in idx[1].iter().enumerate() {
                let wjk = w[1][mj] * w[2][mk];
                let row = n * (j + n * k);
                for (mi, &i) in idx[0].iter().enumerate() {
                    let wt = wjk * w[0][mi];
                    for (o, c) in out.iter_mut().zip(comps.iter()) {
                        *o += wt * c[row + i];
                    }
                }
            }
        }
        out
    }
}

/// Smooth time cutoff `e_I^{1/2}`: one on `|t - t0| <= theta/2`, zero for `|t - t0| >= theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeCutoff {
    pub t0: f64,
    pub theta: f64,
}

impl TimeCutoff {
    pub fn sqrt_energy(&self, t: f64) -> f64 {
        let tau = ((t - self.t0).abs() - 0.5 * self.theta) / (0.5 * self.theta);
        if tau <= 0.0 {
            1.0
        } else if tau >= 1.0 {
            0.0
        } else {
            let a = (-1.0 / tau).exp();
            let b = (-1.0 / (1.0 - tau)).exp();
            b / (a + b)
        }
    }

    pub fn energy(&self, t: f64) -> f64 {
        self.sqrt_energy(t).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    /// Budget for `|t - t(I)| sup |grad v_eps|` over the transported window.
    pub b0: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { b0: 0.25 }
    }
}

/// Back-to-labels map sampled at uniform times, with its gradient and inverse gradient.
#[derive(Debug, Clone)]
pub struct TransportedFrame {
    pub t0: f64,
    pub dt: f64,
    /// Sample at which the map is the identity.
    pub initial: usize,
    /// `Gamma - x` per sample.
    pub displacement: Vec<PeriodicField>,
    /// `G^a_j = d_j Gamma^a` at `c2(a, j)`.
    pub grad: Vec<PeriodicField>,
    /// `H = G^{-1}`, entry `H^l_a` at `c2(l, a)`.
    pub inv_grad: Vec<PeriodicField>,
    pub det_range: (f64, f64),
}

impl TransportedFrame {
    pub fn len(&self) -> usize {
        self.displacement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacement.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    /// `Gamma(x)` at grid point `idx` of sample `i`, not reduced mod 1.
    #[inline]
    pub fn label(&self, i: usize, idx: usize) -> [f64; 3] {
        let x = self.displacement[i].grid().point(idx);
        let d = &self.displacement[i];
        [
            x[0] + d.comp(0)[idx],
            x[1] + d.comp(1)[idx],
            x[2] + d.comp(2)[idx],
        ]
    }

    #[inline]
    pub fn grad_at(&self, i: usize, idx: usize) -> [[f64; 3]; 3] {
        let g = &self.grad[i];
        std::array::from_fn(|a| std::array::from_fn(|j| g.comp(c2(a, j))[idx]))
    }

    #[inline]
    pub fn inv_grad_at(&self, i: usize, idx: usize) -> [[f64; 3]; 3] {
        let h = &self.inv_grad[i];
        std::array::from_fn(|l| std::array::from_fn(|a| h.comp(c2(l, a))[idx]))
    }

    /// The identity frame on `samples` time levels.
    pub fn identity(sp: &Spectral, t0: f64, dt: f64, samples: usize, initial: usize) -> Self {
        let grid = sp.grid();
        let d = PeriodicField::zeros(grid, Rank::Vector);
        let (g, h) = gradients(sp, &d)
            .expect("identity frame is regular")
            .into_parts();
        Self {
            t0,
            dt,
            initial,
            displacement: vec![d; samples],
            grad: vec![g; samples],
            inv_grad: vec![h; samples],
            det_range: (1.0, 1.0),
        }
    }

    /// Largest `|Gamma_a - Gamma_b|` (mod 1) between two frames on the same samples.
    pub fn max_label_difference(&self, other: &TransportedFrame) -> f64 {
        let mut worst = 0.0_f64;
        for (a, b) in self.displacement.iter().zip(&other.displacement) {
            for c in 0..3 {
                for (x, y) in a.comp(c).iter().zip(b.comp(c)) {
                    let d = x - y;
                    worst = worst.max((d - d.round()).abs());
                }
            }
        }
        worst
    }
}

struct Gradients {
    g: PeriodicField,
    h: PeriodicField,
    det: (f64, f64, usize, usize),
}

impl Gradients {
    fn into_parts(self) -> (PeriodicField, PeriodicField) {
        (self.g, self.h)
    }
}

pub fn invert3(m: &[[f64; 3]; 3]) -> ([[f64; 3]; 3], f64) {
    let c = |r: usize, s: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (s1, s2) = ((s + 1) % 3, (s + 2) % 3);
        m[r1][s1] * m[r2][s2] - m[r1][s2] * m[r2][s1]
    };
    let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
    let inv = std::array::from_fn(|i| std::array::from_fn(|j| c(j, i) / det));
    (inv, det)
}

fn gradients(sp: &Spectral, d: &PeriodicField) -> Result<Gradients> {
    let grid = sp.grid();
    let gd = sp.gradient(d)?;
    let mut g = PeriodicField::zeros(grid, Rank::Tensor2);
    let mut h = PeriodicField::zeros(grid, Rank::Tensor2);
    let mut det = (f64::INFINITY, f64::NEG_INFINITY, 0, 0);
    for idx in 0..grid.len() {
        let m: [[f64; 3]; 3] = std::array::from_fn(|a| {
            std::array::from_fn(|j| if a == j { 1.0 } else { 0.0 } + gd.comp(c2(j, a))[idx])
        });
        let (inv, dm) = invert3(&m);
        if dm < det.0 {
            det.0 = dm;
            det.2 = idx;
        }
        if dm > det.1 {
            det.1 = dm;
            det.3 = idx;
        }
        for a in 0..3 {
            for j in 0..3 {
                g.comp_mut(c2(a, j))[idx] = m[a][j];
                h.comp_mut(c2(a, j))[idx] = inv[a][j];
            }
        }
    }
    Ok(Gradients { g, h, det })
}

fn velocity_at(interp: &Interpolator, v: &[&PeriodicField; 2], w: f64, y: [f64; 3]) -> [f64; 3] {
    let a = interp.eval([v[0].comp(0), v[0].comp(1), v[0].comp(2)], y);
    if w == 0.0 {
        return a;
    }
    let b = interp.eval([v[1].comp(0), v[1].comp(1), v[1].comp(2)], y);
    std::array::from_fn(|c| (1.0 - w) * a[c] + w * b[c])
}

/// Transports the labels over the samples of `v_eps` starting from the identity at sample `initial`.
///
/// `v_eps` holds one field per time sample, or a single field for a steady flow; `samples` is the
/// number of time levels.
pub fn advect_frame(
    sp: &Spectral,
    v_eps: &[PeriodicField],
    t0: f64,
    dt: f64,
    samples: usize,
    initial: usize,
    config: FrameConfig,
) -> Result<TransportedFrame> {
    if v_eps.is_empty() || (v_eps.len() != 1 && v_eps.len() != samples) || initial >= samples {
        return Err(LabError::Config(format!(
            "need 1 or {samples} velocity samples and an initial sample below {samples}"
        )));
    }
    let grid = sp.grid();
    let mut vmax = 0.0_f64;
    let mut gradmax = 0.0_f64;
    for v in v_eps {
        v.expect_rank(Rank::Vector)?;
        vmax = vmax.max(v.magnitude().into_iter().fold(0.0, f64::max));
        gradmax = gradmax.max(sp.gradient(v)?.sup_norm());
    }
    let cfl = dt * vmax * grid.n() as f64;
    if cfl >= 0.5 {
        return Err(LabError::Cfl(format!("dt |v| n = {cfl:.3} >= 1/2")));
    }
    let span = dt * (initial.max(samples - 1 - initial)) as f64;
    if span * gradmax > config.b0 {
        return Err(LabError::Cfl(format!(
            "window {span:.3e} times sup |grad v| {gradmax:.3e} exceeds budget {}",
            config.b0
        )));
    }
    let steady = v_eps.len() == 1;
    let vel = |i: usize| if steady { &v_eps[0] } else { &v_eps[i] };
    let interp = Interpolator::new(grid);
    let mut disp: Vec<Option<PeriodicField>> = vec![None; samples];
    disp[initial] = Some(PeriodicField::zeros(grid, Rank::Vector));
    let zero_flow = vmax == 0.0;
    // forward in time: trace back from t_i to t_{i-1}; backward in time: trace forward to t_{i+1}
    let order: Vec<(usize, usize)> = (initial + 1..samples)
        .map(|i| (i, i - 1))
        .chain((0..initial).rev().map(|i| (i, i + 1)))
        .collect();
    for (i, prev) in order {
        let old = disp[prev].clone().expect("previous sample computed");
        if zero_flow {
            disp[i] = Some(old);
            continue;
        }
        let h = dt * (prev as f64 - i as f64);
        let pair = [vel(i), vel(prev)];
        let mut new = PeriodicField::zeros(grid, Rank::Vector);
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            let step =
                |y: [f64; 3], w: f64| velocity_at(&interp, &pair, if steady { 0.0 } else { w }, y);
            let k1 = step(x, 0.0);
            let y2 = std::array::from_fn(|c| x[c] + 0.5 * h * k1[c]);
            let k2 = step(y2, 0.5);
            let y3 = std::array::from_fn(|c| x[c] + 0.5 * h * k2[c]);
            let k3 = step(y3, 0.5);
            let y4 = std::array::from_fn(|c| x[c] + h * k3[c]);
            let k4 = step(y4, 1.0);
            let y: [f64; 3] = std::array::from_fn(|c| {
                x[c] + h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
            });
            let d = interp.eval([old.comp(0), old.comp(1), old.comp(2)], y);
            for c in 0..3 {
                new.comp_mut(c)[idx] = y[c] + d[c] - x[c];
            }
        }
        disp[i] = Some(new);
    }
    let displacement: Vec<PeriodicField> = disp
        .into_iter()
        .map(|d| d.expect("all samples computed"))
        .collect();
    let mut grad = Vec::with_capacity(samples);
    let mut inv_grad = Vec::with_capacity(samples);
    let mut det_range = (f64::INFINITY, f64::NEG_INFINITY);
    for d in &displacement {
        let gr = gradients(sp, d)?;
        if gr.det.0 < 0.5 {
            return Err(LabError::FrameDeterminant {
                det: gr.det.0,
                index: gr.det.2,
            });
        }
        if gr.det.1 > 2.0 {
            return Err(LabError::FrameDeterminant {
                det: gr.det.1,
                index: gr.det.3,
            });
        }
        det_range = (det_range.0.min(gr.det.0), det_range.1.max(gr.det.1));
        let (g, h) = gr.into_parts();
        grad.push(g);
        inv_grad.push(h);
    }
    Ok(TransportedFrame {
        t0,
        dt,
        initial,
        displacement,
        grad,
        inv_grad,
        det_range,
    })
}

/// The steady cellular flow `a (sin 2 pi x cos 2 pi y, -cos 2 pi x sin 2 pi y, 0)`, rotating within each cell.
pub fn cellular_flow(grid: Grid, amplitude: f64) -> PeriodicField {
    use std::f64::consts::PI;
    PeriodicField::from_fn(grid, Rank::Vector, |x, c| {
        let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
        let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
        amplitude
            * match c {
                0 => sx * cy,
                1 => -cx * sy,
                _ => 0.0,
            }
    })
}
