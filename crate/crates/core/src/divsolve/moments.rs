//! Linear and angular momentum of compactly supported sources, and the periodic remainder solve.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{c2, c3, compensated_sum, Grid, PeriodicField, Rank, Spectral};

/// Axis-aligned box on the torus; `half_width` entries below `1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub center: [f64; 3],
    pub half_width: [f64; 3],
}

impl SupportBox {
    pub fn new(center: [f64; 3], half_width: [f64; 3]) -> Result<Self> {
        if half_width.iter().any(|h| !(*h > 0.0 && *h < 0.5)) {
            return Err(LabError::Config(format!(
                "box half widths {half_width:?} must lie in (0, 1/2)"
            )));
        }
        Ok(Self { center, half_width })
    }

    /// Smallest box holding every nonzero entry of `f`, widened by `margin` grid cells.
    /// `None` for a zero field or one whose support wraps around some axis.
    pub fn enclosing(f: &PeriodicField, margin: usize) -> Option<Self> {
        let nonzero =
            (0..f.grid().len()).filter(|&idx| (0..f.ncomp()).any(|c| f.comp(c)[idx] != 0.0));
        Self::enclosing_points(f.grid(), nonzero, margin)
    }

    /// Smallest box holding the given grid points, widened by `margin` cells.
    pub fn enclosing_points(
        grid: Grid,
        points: impl IntoIterator<Item = usize>,
        margin: usize,
    ) -> Option<Self> {
        let n = grid.n();
        let mut occupied = [vec![false; n], vec![false; n], vec![false; n]];
        let mut any = false;
        for idx in points {
            any = true;
            let ijk = grid.unflatten(idx);
            for a in 0..3 {
                occupied[a][ijk[a]] = true;
            }
        }
        if !any {
            return None;
        }
        let h = grid.spacing();
        let mut center = [0.0; 3];
        let mut half_width = [0.0; 3];
        for a in 0..3 {
            // the longest circular run of empty cells bounds the support on this axis
            let (mut best_len, mut best_end, mut run) = (0usize, 0usize, 0usize);
            for i in 0..2 * n {
                if occupied[a][i % n] {
                    run = 0;
                } else {
                    run += 1;
                    if run > best_len {
                        best_len = run.min(n);
                        best_end = i % n;
                    }
                }
            }
            let span = n - best_len;
            let first = (best_end + 1) % n;
            center[a] = (first as f64 + 0.5 * (span as f64 - 1.0)) * h;
            half_width[a] = (0.5 * (span as f64 - 1.0) + margin as f64 + 0.5) * h;
        }
        Self::new(center, half_width).ok()
    }

    /// Box-centered coordinate of `x`, or `None` outside the box.
    pub fn local(&self, x: [f64; 3]) -> Option<[f64; 3]> {
        let mut y = [0.0; 3];
        for a in 0..3 {
            let d = x[a] - self.center[a];
            y[a] = d - d.round();
            if y[a].abs() > self.half_width[a] {
                return None;
            }
        }
        Some(y)
    }
}

/// Sup-norm of any field outside the box, relative to its sup-norm.
pub fn leak(f: &PeriodicField, b: &SupportBox) -> f64 {
    let grid = f.grid();
    let scale = f.sup_norm();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0_f64;
    for idx in 0..grid.len() {
        if b.local(grid.point(idx)).is_none() {
            for c in 0..f.ncomp() {
                worst = worst.max(f.comp(c)[idx].abs());
            }
        }
    }
    worst / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// `int U dx`.
    pub linear: [f64; 3],
    /// `int (x^j U^l - x^l U^j) dx` for `(j, l) = (0, 1), (0, 2), (1, 2)`.
    pub angular: [f64; 3],
    /// `int |U| dx`, the natural scale of both.
    pub l1: f64,
}

impl Moments {
    pub fn max_abs(&self) -> f64 {
        self.linear
            .iter()
            .chain(&self.angular)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub const LEAK_TOLERANCE: f64 = 1e-13;

/// Moments of `U` about the box center; fails when `U` leaks outside the box.
pub fn moment_check(u: &PeriodicField, support: &SupportBox) -> Result<Moments> {
    u.expect_rank(Rank::Vector)?;
    let l = leak(u, support);
    if l > LEAK_TOLERANCE {
        return Err(LabError::SupportLeak(l));
    }
    let grid = u.grid();
    let values: Vec<(usize, [f64; 3])> = (0..grid.len())
        .map(|idx| (idx, [u.comp(0)[idx], u.comp(1)[idx], u.comp(2)[idx]]))
        .collect();
    Ok(moments_in_box(grid, &values, support))
}

/// Moments of grid values about the box center, ignoring values outside the box.
fn moments_in_box(grid: Grid, values: &[(usize, [f64; 3])], support: &SupportBox) -> Moments {
    let w = 1.0 / grid.len() as f64;
    let inside: Vec<([f64; 3], [f64; 3])> = values
        .iter()
        .filter_map(|(idx, u)| support.local(grid.point(*idx)).map(|y| (y, *u)))
        .collect();
    let linear = std::array::from_fn(|c| w * compensated_sum(inside.iter().map(|(_, u)| u[c])));
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let angular = std::array::from_fn(|p| {
        let (j, l) = pairs[p];
        w * compensated_sum(inside.iter().map(|(y, u)| y[j] * u[l] - y[l] * u[j]))
    });
    let l1 = w * compensated_sum(
        values
            .iter()
            .map(|(_, u)| (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt()),
    );
    Moments {
        linear,
        angular,
        l1,
    }
}

/// `d_a d_c T^{alc}` by centered differences of a tensor given on a few grid points.
pub fn sparse_double_divergence(grid: Grid, t: &[(usize, [f64; 27])]) -> Vec<(usize, [f64; 3])> {
    let n = grid.n();
    let inv = 0.5 / grid.spacing();
    let shift = |idx: usize, axis: usize, up: bool| {
        let mut p = grid.unflatten(idx);
        p[axis] = if up {
            (p[axis] + 1) % n
        } else {
            (p[axis] + n - 1) % n
        };
        grid.index(p[0], p[1], p[2])
    };
    // (D_c f)(x) = (f(x + e_c) - f(x - e_c)) / 2h, so f at y feeds x = y -+ e_c
    let mut inner: BTreeMap<usize, [f64; 9]> = BTreeMap::new();
    for (idx, v) in t {
        for c in 0..3 {
            for (up, sign) in [(false, 1.0), (true, -1.0)] {
                let e = inner.entry(shift(*idx, c, up)).or_insert([0.0; 9]);
                for a in 0..3 {
                    for l in 0..3 {
                        e[c2(a, l)] += sign * inv * v[c3(a, l, c)];
                    }
                }
            }
        }
    }
    let mut out: BTreeMap<usize, [f64; 3]> = BTreeMap::new();
    for (idx, v) in &inner {
        for a in 0..3 {
            for (up, sign) in [(false, 1.0), (true, -1.0)] {
                let e = out.entry(shift(*idx, a, up)).or_insert([0.0; 3]);
                for l in 0..3 {
                    e[l] += sign * inv * v[c2(a, l)];
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Moments of sparse grid values about their enclosing box; `None` when empty or wrapping.
pub fn sparse_moments(grid: Grid, values: &[(usize, [f64; 3])]) -> Option<Moments> {
    let support = SupportBox::enclosing_points(grid, values.iter().map(|(i, _)| *i), 0)?;
    Some(moments_in_box(grid, values, &support))
}

/// Centered difference `(f(x + h e_a) - f(x - h e_a)) / 2h`, which widens supports by one cell.
fn centered(grid: crate::fields::Grid, data: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.n();
    let inv = 0.5 / grid.spacing();
    (0..grid.len())
        .map(|idx| {
            let mut p = grid.unflatten(idx);
            let mut m = p;
            p[axis] = (p[axis] + 1) % n;
            m[axis] = (m[axis] + n - 1) % n;
            (data[grid.index(p[0], p[1], p[2])] - data[grid.index(m[0], m[1], m[2])]) * inv
        })
        .collect()
}

/// `d_a S^{al}` with centered differences.
pub fn compact_divergence(s: &PeriodicField) -> Result<PeriodicField> {
    if !matches!(s.rank(), Rank::Sym2 | Rank::Antisym2 | Rank::Tensor2) {
        return Err(LabError::RankMismatch {
            expected: "two-tensor",
            got: s.rank().name(),
        });
    }
    let grid = s.grid();
    let mut out = PeriodicField::zeros(grid, Rank::Vector);
    for a in 0..3 {
        for l in 0..3 {
            let d = centered(grid, s.comp(c2(a, l)), a);
            for (o, v) in out.comp_mut(l).iter_mut().zip(d) {
                *o += v;
            }
        }
    }
    Ok(out)
}

/// `d_a d_c T^{alc}` with centered differences.
pub fn compact_double_divergence(t: &PeriodicField) -> Result<PeriodicField> {
    t.expect_rank(Rank::Rank3)?;
    let grid = t.grid();
    let mut inner = PeriodicField::zeros(grid, Rank::Tensor2);
    for a in 0..3 {
        for l in 0..3 {
            for c in 0..3 {
                let d = centered(grid, t.comp(c3(a, l, c)), c);
                for (o, v) in inner.comp_mut(c2(a, l)).iter_mut().zip(d) {
                    *o += v;
                }
            }
        }
    }
    compact_divergence(&inner)
}

/// Symmetric periodic `R` with `d_j R^{jl} = U^l`; compact support is not preserved.
pub fn solve_remainder(sp: &Spectral, u: &PeriodicField) -> Result<PeriodicField> {
    u.expect_rank(Rank::Vector)?;
    sp.anti_divergence_sym(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(x: [f64; 3], c: [f64; 3], sigma: f64) -> f64 {
        let r2: f64 = (0..3)
            .map(|a| {
                let d = x[a] - c[a];
                (d - d.round()).powi(2)
            })
            .sum();
        (-0.5 * r2 / (sigma * sigma)).exp()
    }

    fn symmetric_gaussian(grid: Grid, c: [f64; 3]) -> PeriodicField {
        let mut s = PeriodicField::from_fn(grid, Rank::Sym2, |x, k| {
            let (j, l) = (k / 3, k % 3);
            let d = |a: usize| {
                let v = x[a] - c[a];
                v - v.round()
            };
            let poly = 1.0 + d(j) * d(l) * 20.0 + 0.1 * (j + l) as f64;
            poly * gaussian(x, c, 0.05)
        });
        s.scale(3.0);
        s
    }

    #[test]
    fn divergence_of_symmetric_tensor_has_no_moments() {
        let grid = Grid::new(64).unwrap();
        let sp = Spectral::new(grid);
        let c = [0.4, 0.55, 0.3];
        let s = symmetric_gaussian(grid, c);
        let u = sp.divergence(&s).unwrap();
        let b = SupportBox::new(c, [0.45; 3]).unwrap();
        let m = moment_check(&u, &b).unwrap();
        assert!(m.max_abs() < 1e-10 * s.sup_norm(), "{m:?}");
        // the linear moment is blind to symmetry, the angular one is not
        let mut skew = PeriodicField::from_fn(grid, Rank::Tensor2, |x, k| {
            if k == c2(0, 1) {
                gaussian(x, c, 0.05)
            } else {
                0.0
            }
        });
        skew.scale(2.0);
        let m = moment_check(&sp.divergence(&skew).unwrap(), &b).unwrap();
        assert!(m.linear.iter().all(|v| v.abs() < 1e-12));
        assert!(m.angular[0].abs() > 1e-4);
    }

    #[test]
    fn bump_with_mean_is_flagged_and_zero_is_zero() {
        let grid = Grid::new(32).unwrap();
        let c = [0.5; 3];
        let u = PeriodicField::from_fn(grid, Rank::Vector, |x, k| {
            if k == 2 {
                gaussian(x, c, 0.05)
            } else {
                0.0
            }
        });
        let b = SupportBox::new(c, [0.45; 3]).unwrap();
        let m = moment_check(&u, &b).unwrap();
        assert!(m.linear[2] > 1e-4);
        let z = moment_check(&PeriodicField::zeros(grid, Rank::Vector), &b).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let small = SupportBox::new(c, [0.1; 3]).unwrap();
        assert!(matches!(
            moment_check(&u, &small),
            Err(LabError::SupportLeak(_))
        ));
    }

    #[test]
    fn compact_operators_are_exact_on_moments() {
        let grid = Grid::new(32).unwrap();
        // a rough, exactly compactly supported rank-3 tensor
        let t = PeriodicField::from_fn(grid, Rank::Rank3, |x, k| {
            let inside = (0..3).all(|a| (x[a] - 0.6).abs() < 0.15);
            if inside {
                ((k as f64 + 1.0) * 37.0 * (x[0] + 2.0 * x[1] - x[2])).sin()
            } else {
                0.0
            }
        });
        let u = compact_double_divergence(&t).unwrap();
        let b = SupportBox::enclosing(&t, 2).unwrap();
        let m = moment_check(&u, &b).unwrap();
        assert!(m.max_abs() < 1e-12 * m.l1, "{m:?}");
        let s = PeriodicField::from_fn(grid, Rank::Sym2, |x, k| {
            let (j, l) = (k / 3, k % 3);
            if (0..3).all(|a| (x[a] - 0.2).abs() < 0.1) {
                (x[j] * 13.0).cos() * (x[l] * 7.0).cos()
            } else {
                0.0
            }
        });
        let b = SupportBox::enclosing(&s, 1).unwrap();
        let m = moment_check(&compact_divergence(&s).unwrap(), &b).unwrap();
        assert!(m.max_abs() < 1e-12 * m.l1, "{m:?}");
    }

    #[test]
    fn sparse_and_dense_compact_operators_agree() {
        let grid = Grid::new(16).unwrap();
        let t = PeriodicField::from_fn(grid, Rank::Rank3, |x, k| {
            if (0..3).all(|a| (x[a] - 0.3).abs() < 0.1) {
                (k as f64 + x[0] * 5.0 - x[2]).cos()
            } else {
                0.0
            }
        });
        let points: Vec<(usize, [f64; 27])> = (0..grid.len())
            .filter(|&i| t.comp(0)[i] != 0.0)
            .map(|i| (i, std::array::from_fn(|c| t.comp(c)[i])))
            .collect();
        let dense = compact_double_divergence(&t).unwrap();
        let sparse = sparse_double_divergence(grid, &points);
        let mut worst = 0.0_f64;
        for (i, v) in &sparse {
            for l in 0..3 {
                worst = worst.max((dense.comp(l)[*i] - v[l]).abs());
            }
        }
        let covered: usize = sparse.len();
        let nonzero = (0..grid.len())
            .filter(|&i| (0..3).any(|l| dense.comp(l)[i] != 0.0))
            .count();
        assert!(worst < 1e-12 && covered >= nonzero);
        let m = sparse_moments(grid, &sparse).unwrap();
        assert!(m.max_abs() < 1e-12 * m.l1);
    }

    #[test]
    fn enclosing_box_handles_wrapped_supports() {
        let grid = Grid::new(16).unwrap();
        let f = PeriodicField::from_fn(grid, Rank::Scalar, |x, _| {
            let near = |v: f64, c: f64| {
                let d = v - c;
                (d - d.round()).abs() < 0.1
            };
            if near(x[0], 0.0) && near(x[1], 0.5) && near(x[2], 0.95) {
                1.0
            } else {
                0.0
            }
        });
        let b = SupportBox::enclosing(&f, 0).unwrap();
        assert!(leak(&f, &b) == 0.0);
        assert!(b.half_width.iter().all(|h| *h < 0.15));
        assert!(SupportBox::enclosing(&PeriodicField::zeros(grid, Rank::Scalar), 0).is_none());
    }

    #[test]
    fn remainder_solve_round_trips() {
        let grid = Grid::new(16).unwrap();
        let sp = Spectral::new(grid);
        let u = PeriodicField::from_fn(grid, Rank::Vector, |x, c| {
            (std::f64::consts::TAU * (x[(c + 1) % 3] + 2.0 * x[c])).sin()
        });
        let r = solve_remainder(&sp, &u).unwrap();
        assert_eq!(r.symmetry_defect(), 0.0);
        assert!(sp.divergence(&r).unwrap().sub(&u).unwrap().sup_norm() < 1e-10);
        let shifted = PeriodicField::from_fn(grid, Rank::Vector, |_, _| 1.0);
        assert!(matches!(
            solve_remainder(&sp, &shifted),
            Err(LabError::NonzeroMean { .. })
        ));
    }
}
