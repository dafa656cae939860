//! Sampled estimate of `|v|_{L^r} + sup_h |h|^{-s} |v(. - h) - v|_{L^r}`.
//!
//! The sup runs over a finite shift set, so the result is a lower bound for the norm.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{PeriodicField, Rank, Spectral};

/// Shifts `h = m d` for every listed magnitude `m` and unit direction `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSet {
    pub magnitudes: Vec<f64>,
    pub directions: Vec<[f64; 3]>,
}

impl ShiftSet {
    /// `count` log-spaced magnitudes from one grid cell to `1/2`, along the 13 lattice
    /// directions: 3 axes, 6 face diagonals, 4 body diagonals.
    pub fn log_spaced(n: usize, count: usize) -> Self {
        let lo = (1.0 / n as f64).ln();
        let hi = 0.5f64.ln();
        let magnitudes = (0..count)
            .map(|i| {
                let t = if count > 1 {
                    i as f64 / (count - 1) as f64
                } else {
                    0.0
                };
                (lo + t * (hi - lo)).exp()
            })
            .collect();
        let mut directions = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            for sign in [1.0, -1.0] {
                let mut d = [0.0; 3];
                d[a] = s2;
                d[b] = sign * s2;
                directions.push(d);
            }
        }
        let s3 = 1.0 / 3f64.sqrt();
        for (sb, sc) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            directions.push([s3, sb * s3, sc * s3]);
        }
        Self {
            magnitudes,
            directions,
        }
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len() * self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shifts(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.magnitudes
            .iter()
            .flat_map(move |m| self.directions.iter().map(move |d| d.map(|c| m * c)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovEstimate {
    pub r: f64,
    pub s: f64,
    pub lr_norm: f64,
    /// `max_h |h|^{-s} |delta_h v|_{L^r}` over the shift set.
    pub increment_sup: f64,
    pub argmax: [f64; 3],
    pub shifts: usize,
    pub norm: f64,
}

/// Discrete sup over `shifts` with spectral translation; `r >= 3`, `s` in `(0, 1)`.
pub fn besov_norm(
    sp: &Spectral,
    v: &PeriodicField,
    r: f64,
    s: f64,
    shifts: &ShiftSet,
) -> Result<BesovEstimate> {
    Ok(besov_norms(sp, v, &[r], s, shifts)?.remove(0))
}

/// One pass over the shifts for several integrability exponents.
pub fn besov_norms(
    sp: &Spectral,
    v: &PeriodicField,
    rs: &[f64],
    s: f64,
    shifts: &ShiftSet,
) -> Result<Vec<BesovEstimate>> {
    if rs.is_empty() || rs.iter().any(|r| !(*r >= 3.0)) || !(s > 0.0 && s < 1.0) {
        return Err(LabError::Config(format!(
            "Besov exponents r = {rs:?}, s = {s} outside r >= 3, 0 < s < 1"
        )));
    }
    let grid = v.grid();
    let n = grid.n();
    let v = sp.strip_nyquist(v);
    let specs: Vec<Vec<Complex64>> = (0..v.ncomp()).map(|c| sp.forward(v.comp(c))).collect();
    let mut best = vec![(0.0_f64, [0.0; 3]); rs.len()];
    let mut buf = vec![Complex64::default(); grid.len()];
    for h in shifts.shifts() {
        // e^{-i k.h} factors per axis; the Nyquist row is already empty.
        let phase: Vec<Vec<Complex64>> = h
            .iter()
            .map(|&ha| {
                (0..n)
                    .map(|i| Complex64::from_polar(1.0, -2.0 * PI * grid.wavenumber(i) as f64 * ha))
                    .collect()
            })
            .collect();
        let mut comps = Vec::with_capacity(specs.len());
        for (c, spec) in specs.iter().enumerate() {
            for (idx, (out, z)) in buf.iter_mut().zip(spec).enumerate() {
                let [i, j, l] = grid.unflatten(idx);
                *out = z * phase[0][i] * phase[1][j] * phase[2][l];
            }
            let shifted = sp.inverse_real(buf.clone());
            comps.push(
                shifted
                    .into_iter()
                    .zip(v.comp(c))
                    .map(|(a, b)| a - b)
                    .collect(),
            );
        }
        let delta = PeriodicField::from_components(grid, v.rank(), comps)?;
        let mag = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
        for (b, &r) in best.iter_mut().zip(rs) {
            let q = delta.lp_norm(r) / mag.powf(s);
            if q > b.0 {
                *b = (q, h);
            }
        }
    }
    Ok(rs
        .iter()
        .zip(best)
        .map(|(&r, (sup, argmax))| {
            let lr_norm = v.lp_norm(r);
            BesovEstimate {
                r,
                s,
                lr_norm,
                increment_sup: sup,
                argmax,
                shifts: shifts.len(),
                norm: lr_norm + sup,
            }
        })
        .collect())
}

/// Convenience wrapper for scalars and vectors alike.
pub fn besov_third(sp: &Spectral, v: &PeriodicField, r: f64) -> Result<BesovEstimate> {
    if !matches!(v.rank(), Rank::Scalar | Rank::Vector) {
        return Err(LabError::RankMismatch {
            expected: "scalar or vector",
            got: v.rank().name(),
        });
    }
    besov_norm(sp, v, r, 1.0 / 3.0, &ShiftSet::log_spaced(v.grid().n(), 16))
}
