use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{LabError, Result};

/// Tensor rank of a sampled field. Two-tensors are stored with all nine components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rank {
    Scalar,
    Vector,
    Sym2,
    Antisym2,
    /// General two-tensor such as a velocity gradient.
    Tensor2,
    Rank3,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => 3,
            Rank::Sym2 | Rank::Antisym2 | Rank::Tensor2 => 9,
            Rank::Rank3 => 27,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Rank::Scalar => 0,
            Rank::Vector => 1,
            Rank::Sym2 => 2,
            Rank::Antisym2 => 3,
            Rank::Rank3 => 4,
            Rank::Tensor2 => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Rank::Scalar,
            1 => Rank::Vector,
            2 => Rank::Sym2,
            3 => Rank::Antisym2,
            4 => Rank::Rank3,
            5 => Rank::Tensor2,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Rank::Scalar => "scalar",
            Rank::Vector => "vector",
            Rank::Sym2 => "sym2",
            Rank::Antisym2 => "antisym2",
            Rank::Tensor2 => "tensor2",
            Rank::Rank3 => "rank3",
        }
    }
}

#[inline]
pub const fn c2(j: usize, l: usize) -> usize {
    3 * j + l
}

#[inline]
pub const fn c3(a: usize, b: usize, c: usize) -> usize {
    9 * a + 3 * b + c
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0_f64, 0.0_f64);
    for v in values {
        let t = sum + v;
        c += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + c
}

/// Sampled field on the unit torus, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    grid: Grid,
    rank: Rank,
    data: Vec<f64>,
}

impl PeriodicField {
    pub fn zeros(grid: Grid, rank: Rank) -> Self {
        Self {
            grid,
            rank,
            data: vec![0.0; grid.len() * rank.components()],
        }
    }

    pub fn from_data(grid: Grid, rank: Rank, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() * rank.components() {
            return Err(LabError::Format(format!(
                "expected {} samples, got {}",
                grid.len() * rank.components(),
                data.len()
            )));
        }
        Ok(Self { grid, rank, data })
    }

    /// Samples `f(x, component)` at every grid point.
    pub fn from_fn(grid: Grid, rank: Rank, f: impl Fn([f64; 3], usize) -> f64) -> Self {
        let mut out = Self::zeros(grid, rank);
        let len = grid.len();
        for c in 0..rank.components() {
            let comp = &mut out.data[c * len..(c + 1) * len];
            for (idx, val) in comp.iter_mut().enumerate() {
                *val = f(grid.point(idx), c);
            }
        }
        out
    }

    pub fn from_components(grid: Grid, rank: Rank, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != rank.components() {
            return Err(LabError::Format(format!(
                "{} needs {} components, got {}",
                rank.name(),
                rank.components(),
                comps.len()
            )));
        }
        let mut data = Vec::with_capacity(grid.len() * comps.len());
        for c in comps {
            if c.len() != grid.len() {
                return Err(LabError::Format("component length mismatch".into()));
            }
            data.extend_from_slice(&c);
        }
        Ok(Self { grid, rank, data })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn ncomp(&self) -> usize {
        self.rank.components()
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.data[c * len..(c + 1) * len]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let len = self.grid.len();
        &mut self.data[c * len..(c + 1) * len]
    }

    /// Value of all components at a point.
    pub fn at(&self, idx: usize) -> Vec<f64> {
        let len = self.grid.len();
        (0..self.ncomp())
            .map(|c| self.data[c * len + idx])
            .collect()
    }

    pub fn expect_rank(&self, rank: Rank) -> Result<()> {
        if self.rank != rank {
            return Err(LabError::RankMismatch {
                expected: rank.name(),
                got: self.rank.name(),
            });
        }
        Ok(())
    }

    pub fn check_compatible(&self, other: &PeriodicField) -> Result<()> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch(self.grid.n(), other.grid.n()));
        }
        self.expect_rank(other.rank)
    }

    /// Relabels the rank without touching samples; both ranks must have the same component count.
    pub fn with_rank(mut self, rank: Rank) -> Self {
        assert_eq!(rank.components(), self.rank.components());
        self.rank = rank;
        self
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise Euclidean magnitude over components.
    pub fn magnitude(&self) -> Vec<f64> {
        let len = self.grid.len();
        (0..len)
            .map(|idx| {
                (0..self.ncomp())
                    .map(|c| self.data[c * len + idx].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn mean(&self, c: usize) -> f64 {
        let comp = self.comp(c);
        compensated_sum(comp.iter().copied()) / comp.len() as f64
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.ncomp()).map(|c| self.mean(c)).collect()
    }

    /// Discrete `L^p` norm of the pointwise magnitude, using the grid mean as the measure.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mag = self.magnitude();
        let s = if p.fract() == 0.0 && p.abs() < 64.0 {
            let e = p as i32;
            compensated_sum(mag.iter().map(|m| m.powi(e)))
        } else {
            compensated_sum(mag.iter().map(|m| m.powf(p)))
        } / mag.len() as f64;
        s.powf(1.0 / p)
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn add_assign(&mut self, other: &PeriodicField) -> Result<()> {
        self.check_compatible(other)?;
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn axpy(&mut self, alpha: f64, other: &PeriodicField) -> Result<()> {
        self.check_compatible(other)?;
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += alpha * b);
        Ok(())
    }

    pub fn sub(&self, other: &PeriodicField) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn add(&self, other: &PeriodicField) -> Result<Self> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    /// Outer product `a^j b^l` of two vector fields as a full two-tensor.
    pub fn outer(a: &PeriodicField, b: &PeriodicField) -> Result<Self> {
        a.expect_rank(Rank::Vector)?;
        b.expect_rank(Rank::Vector)?;
        if a.grid != b.grid {
            return Err(LabError::GridMismatch(a.grid.n(), b.grid.n()));
        }
        let rank = if std::ptr::eq(a, b) {
            Rank::Sym2
        } else {
            Rank::Tensor2
        };
        let mut out = Self::zeros(a.grid, rank);
        for j in 0..3 {
            for l in 0..3 {
                let (aj, bl) = (a.comp(j), b.comp(l));
                let dst = out.comp_mut(c2(j, l));
                for idx in 0..dst.len() {
                    dst[idx] = aj[idx] * bl[idx];
                }
            }
        }
        Ok(out)
    }

    /// Symmetric part `(a b + b a)` of two vector fields.
    pub fn sym_outer(a: &PeriodicField, b: &PeriodicField) -> Result<Self> {
        let ab = Self::outer(a, b)?;
        let mut out = ab.clone().with_rank(Rank::Sym2);
        for j in 0..3 {
            for l in 0..3 {
                let t = ab.comp(c2(l, j)).to_vec();
                out.comp_mut(c2(j, l))
                    .iter_mut()
                    .zip(t)
                    .for_each(|(x, y)| *x += y);
            }
        }
        Ok(out)
    }

    /// Sets `R^{jl} = s` on the diagonal.
    pub fn identity_times(s: &PeriodicField) -> Result<Self> {
        s.expect_rank(Rank::Scalar)?;
        let mut out = Self::zeros(s.grid, Rank::Sym2);
        for j in 0..3 {
            out.comp_mut(c2(j, j)).copy_from_slice(s.comp(0));
        }
        Ok(out)
    }

    /// Largest violation of the rank's symmetry constraint.
    pub fn symmetry_defect(&self) -> f64 {
        let sign = match self.rank {
            Rank::Sym2 => 1.0,
            Rank::Antisym2 => -1.0,
            _ => return 0.0,
        };
        let mut worst = 0.0_f64;
        for j in 0..3 {
            for l in 0..3 {
                let (a, b) = (self.comp(c2(j, l)), self.comp(c2(l, j)));
                for (x, y) in a.iter().zip(b) {
                    worst = worst.max((x - sign * y).abs());
                }
            }
        }
        worst
    }

    /// Circular shift by whole grid cells: `out(x) = self(x - s h)`.
    pub fn roll(&self, shift: [usize; 3]) -> Self {
        let n = self.grid.n();
        let mut out = Self::zeros(self.grid, self.rank);
        for c in 0..self.ncomp() {
            let src = self.comp(c);
            let dst = out.comp_mut(c);
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let d = self.grid.index(
                            (i + shift[0]) % n,
                            (j + shift[1]) % n,
                            (k + shift[2]) % n,
                        );
                        dst[d] = src[self.grid.index(i, j, k)];
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_product_is_symmetric_for_equal_inputs() {
        let g = Grid::new(8).unwrap();
        let v = PeriodicField::from_fn(g, Rank::Vector, |x, c| (x[c] * 6.0).sin() + c as f64);
        let vv = PeriodicField::outer(&v, &v).unwrap();
        assert_eq!(vv.symmetry_defect(), 0.0);
    }

    #[test]
    fn lp_norm_of_constant() {
        let g = Grid::new(8).unwrap();
        let v = PeriodicField::from_fn(g, Rank::Vector, |_, c| {
            if c == 0 {
                3.0
            } else {
                4.0 * (c - 1) as f64
            }
        });
        assert!((v.lp_norm(4.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn roll_moves_samples() {
        let g = Grid::new(8).unwrap();
        let f = PeriodicField::from_fn(g, Rank::Scalar, |x, _| x[0] + 10.0 * x[1]);
        let r = f.roll([1, 0, 0]);
        assert_eq!(r.comp(0)[g.index(1, 0, 0)], f.comp(0)[g.index(0, 0, 0)]);
    }
}
