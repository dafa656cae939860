//! Quadratic partition of unity `sum_[k] chi_[k]^2 = 1` with members indexed by `(Z/Pi Z)^3`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{Grid, PeriodicField, Rank};

/// `exp(-1 / (1 - (4 s / 3)^2))` on `|s| < 3/4`.
fn bump(s: f64) -> f64 {
    let t = 4.0 * s / 3.0;
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// One-dimensional factor `b(s) / sqrt(sum_m b(s - m)^2)`, supported in `|s| < 3/4`.
pub fn normalized_bump(s: f64) -> f64 {
    let b = bump(s);
    if b == 0.0 {
        return 0.0;
    }
    let f = s.floor();
    let norm: f64 = (-1..=2).map(|m| bump(s - (f + m as f64)).powi(2)).sum();
    b / norm.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub pi: usize,
}

impl Partition {
    /// Requires `Pi` even and in `[3 xi, 6 xi]`.
    pub fn new(pi: usize, xi: f64) -> Result<Self> {
        if pi % 2 != 0 || pi == 0 {
            return Err(LabError::BadPartition(format!(
                "Pi = {pi} is not a positive even integer"
            )));
        }
        if (pi as f64) < 3.0 * xi - 1e-12 || (pi as f64) > 6.0 * xi + 1e-12 {
            return Err(LabError::BadPartition(format!(
                "Pi = {pi} outside [{}, {}]",
                3.0 * xi,
                6.0 * xi
            )));
        }
        Ok(Self { pi })
    }

    /// Smallest admissible even `Pi` for frequency `xi`.
    pub fn for_frequency(xi: f64) -> Result<Self> {
        let mut pi = (3.0 * xi).ceil() as usize;
        pi += pi % 2;
        Self::new(pi.max(2), xi)
    }

    pub fn members(&self) -> usize {
        self.pi.pow(3)
    }

    pub fn member_index(&self, k: [usize; 3]) -> usize {
        k[0] + self.pi * (k[1] + self.pi * k[2])
    }

    pub fn member_of(&self, index: usize) -> [usize; 3] {
        [
            index % self.pi,
            (index / self.pi) % self.pi,
            index / (self.pi * self.pi),
        ]
    }

    /// `chi_[k](x)` at a label `x` (any representative).
    pub fn value(&self, k: [usize; 3], x: [f64; 3]) -> f64 {
        let p = self.pi as f64;
        (0..3)
            .map(|i| {
                // same reduction as `active`, so both give bit-identical values
                let s = (p * x[i]).rem_euclid(p);
                let k = [k[i] as f64 - p, k[i] as f64, k[i] as f64 + p]
                    .into_iter()
                    .min_by(|a, b| (s - a).abs().total_cmp(&(s - b).abs()))
                    .expect("three candidates");
                normalized_bump(s - k)
            })
            .product()
    }

    /// Members with `chi_[k](x) != 0`, with their values; at most two per axis.
    pub fn active(&self, x: [f64; 3]) -> Vec<([usize; 3], f64)> {
        let p = self.pi as f64;
        let mut axes: [Vec<(usize, f64)>; 3] = Default::default();
        for (i, axis) in axes.iter_mut().enumerate() {
            let s = (p * x[i]).rem_euclid(p);
            let base = s.floor() as i64;
            for k in base - 1..=base + 1 {
                let kk = k.rem_euclid(self.pi as i64) as usize;
                let t = s - k as f64;
                let v = normalized_bump(t);
                if v != 0.0 && !axis.iter().any(|(j, _)| *j == kk) {
                    axis.push((kk, v));
                }
            }
        }
        let mut out = Vec::with_capacity(8);
        for &(a, va) in &axes[0] {
            for &(b, vb) in &axes[1] {
                for &(c, vc) in &axes[2] {
                    out.push(([a, b, c], va * vb * vc));
                }
            }
        }
        out
    }

    /// Radius of the ball around `Pi^{-1} [k]` containing the support of each member.
    pub fn support_radius(&self) -> f64 {
        0.75 * 3f64.sqrt() / self.pi as f64
    }

    /// `max |sum_[k] chi^2 - 1|` over the grid with the members evaluated at `labels`.
    pub fn identity_defect(&self, labels: &PeriodicField) -> Result<f64> {
        labels.expect_rank(Rank::Vector)?;
        let mut worst = 0.0_f64;
        for idx in 0..labels.grid().len() {
            let x = [
                labels.comp(0)[idx],
                labels.comp(1)[idx],
                labels.comp(2)[idx],
            ];
            let s: f64 = self.active(x).iter().map(|(_, v)| v * v).sum();
            worst = worst.max((s - 1.0).abs());
        }
        Ok(worst)
    }

    /// Sampled member `[k]` at the identity labels.
    pub fn sample(&self, k: [usize; 3], grid: Grid) -> PeriodicField {
        PeriodicField::from_fn(grid, Rank::Scalar, |x, _| self.value(k, x))
    }
}
