//! Pointwise amplitudes `gamma_f` solving `sum_f gamma_f^2 f f = G (-P delta - R_eps) G^T`.
//!
//! The time cutoff `e` multiplies the whole wave, so a step cancels `e (P delta + R_eps)`.

use super::directions::DirectionSet;
use crate::error::{LabError, Result};
use crate::fields::{c2, PeriodicField, Rank};

#[inline]
fn conj(g: &[[f64; 3]; 3], r: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let mut s = 0.0;
            for j in 0..3 {
                for l in 0..3 {
                    s += g[a][j] * r[j][l] * g[b][l];
                }
            }
            s
        })
    })
}

fn matrix_at(f: &PeriodicField, idx: usize) -> [[f64; 3]; 3] {
    std::array::from_fn(|a| std::array::from_fn(|b| f.comp(c2(a, b))[idx]))
}

/// Squared amplitudes per grid point, or an error naming the worst point outside the cone.
pub fn solve_amplitudes(
    r_eps: &PeriodicField,
    pressure: &PeriodicField,
    grad: &PeriodicField,
) -> Result<Vec<[f64; 6]>> {
    r_eps.expect_rank(Rank::Sym2)?;
    pressure.expect_rank(Rank::Scalar)?;
    grad.expect_rank(Rank::Tensor2)?;
    let len = r_eps.grid().len();
    let mut out = Vec::with_capacity(len);
    let mut worst: Option<(f64, usize, usize)> = None;
    for idx in 0..len {
        let g = matrix_at(grad, idx);
        let p = pressure.comp(0)[idx];
        let r = matrix_at(r_eps, idx);
        let target: [[f64; 3]; 3] = std::array::from_fn(|a| {
            std::array::from_fn(|b| -r[a][b] - if a == b { p } else { 0.0 })
        });
        let m = conj(&g, &target);
        let scale = m.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs()));
        let mut c = DirectionSet.decompose(&m);
        for (d, v) in c.iter_mut().enumerate() {
            if *v < 0.0 {
                // round-off below the cone edge
                if *v > -1e-13 * scale {
                    *v = 0.0;
                } else if worst.map_or(true, |w| *v < w.0) {
                    worst = Some((*v, d, idx));
                }
            }
        }
        out.push(c);
    }
    if let Some((value, direction, index)) = worst {
        return Err(LabError::OutsideCone {
            value,
            direction,
            index,
        });
    }
    Ok(out)
}

/// The energy floor `m0`: eight times the largest entry of `R_eps` over all samples.
pub fn energy_floor(r_eps: &[PeriodicField]) -> f64 {
    8.0 * r_eps.iter().map(|r| r.sup_norm()).fold(0.0, f64::max)
}

/// `P = -(3 m0 + tr(G R_eps G^T)) / tr(G G^T)`, putting the target at trace `3 m0` in label coordinates.
pub fn choose_pressure(
    r_eps: &PeriodicField,
    grad: &PeriodicField,
    m0: f64,
) -> Result<PeriodicField> {
    r_eps.expect_rank(Rank::Sym2)?;
    grad.expect_rank(Rank::Tensor2)?;
    let grid = r_eps.grid();
    let mut p = PeriodicField::zeros(grid, Rank::Scalar);
    for idx in 0..grid.len() {
        let g = matrix_at(grad, idx);
        let r = matrix_at(r_eps, idx);
        let grg = conj(&g, &r);
        let ggt: f64 = g.iter().flatten().map(|v| v * v).sum();
        p.comp_mut(0)[idx] = -(3.0 * m0 + grg[0][0] + grg[1][1] + grg[2][2]) / ggt;
    }
    Ok(p)
}

/// `sup |sum_f gamma_f^2 G^{-1} f f G^{-T} + P delta + R_eps|` at one time sample.
pub fn cancellation_defect(
    gamma2: &[[f64; 6]],
    r_eps: &PeriodicField,
    pressure: &PeriodicField,
    inv_grad: &PeriodicField,
) -> f64 {
    let mut worst = 0.0_f64;
    for (idx, c) in gamma2.iter().enumerate() {
        let h = matrix_at(inv_grad, idx);
        let mut s = [[0.0; 3]; 3];
        for (d, cd) in c.iter().enumerate() {
            let f = DirectionSet.vector(d);
            let hf: [f64; 3] = std::array::from_fn(|a| (0..3).map(|b| h[a][b] * f[b]).sum());
            for a in 0..3 {
                for b in 0..3 {
                    s[a][b] += cd * hf[a] * hf[b];
                }
            }
        }
        let p = pressure.comp(0)[idx];
        for a in 0..3 {
            for b in 0..3 {
                let v = s[a][b] + if a == b { p } else { 0.0 } + r_eps.comp(c2(a, b))[idx];
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    fn identity_grad(grid: Grid) -> PeriodicField {
        PeriodicField::from_fn(
            grid,
            Rank::Tensor2,
            |_, c| if c % 4 == 0 { 1.0 } else { 0.0 },
        )
    }

    #[test]
    fn isotropic_targets_give_equal_weights() {
        let grid = Grid::new(8).unwrap();
        let c = 0.7;
        let g = identity_grad(grid);
        let r = PeriodicField::from_fn(grid, Rank::Sym2, |_, k| if k % 4 == 0 { -c } else { 0.0 });
        let zero_p = PeriodicField::zeros(grid, Rank::Scalar);
        let a = solve_amplitudes(&r, &zero_p, &g).unwrap();
        assert!(a.iter().flatten().all(|v| (v - c / 4.0).abs() < 1e-15));
        let r0 = PeriodicField::zeros(grid, Rank::Sym2);
        let p = PeriodicField::from_fn(grid, Rank::Scalar, |_, _| -c);
        let b = solve_amplitudes(&r0, &p, &g).unwrap();
        assert!(b.iter().flatten().all(|v| (v - c / 4.0).abs() < 1e-15));
        let h = identity_grad(grid);
        assert!(cancellation_defect(&a, &r, &zero_p, &h) < 1e-15);
    }

    #[test]
    fn anisotropic_target_outside_cone_is_rejected() {
        let grid = Grid::new(8).unwrap();
        let g = identity_grad(grid);
        // -R = diag(1, 0, 0) needs a negative weight on the e2 +- e3 directions
        let r = PeriodicField::from_fn(grid, Rank::Sym2, |_, k| if k == 0 { -1.0 } else { 0.0 });
        let p = PeriodicField::zeros(grid, Rank::Scalar);
        match solve_amplitudes(&r, &p, &g) {
            Err(LabError::OutsideCone { direction, .. }) => assert!(direction >= 4),
            other => panic!("expected OutsideCone, got {other:?}"),
        }
    }

    #[test]
    fn chosen_pressure_puts_target_inside_cone() {
        let grid = Grid::new(8).unwrap();
        let r = PeriodicField::from_fn(grid, Rank::Sym2, |x, k| {
            let (a, b) = (k / 3, k % 3);
            0.3 * ((2.0 * std::f64::consts::PI * x[(a + b) % 3]).sin()
                + if a == b { 0.5 } else { 0.0 })
        });
        let g = PeriodicField::from_fn(grid, Rank::Tensor2, |x, c| {
            (if c % 4 == 0 { 1.0 } else { 0.0 })
                + 0.05 * (2.0 * std::f64::consts::PI * x[c % 3]).cos()
        });
        let m0 = energy_floor(std::slice::from_ref(&r));
        let p = choose_pressure(&r, &g, m0).unwrap();
        let a = solve_amplitudes(&r, &p, &g).unwrap();
        assert!(a.iter().flatten().all(|v| *v > 0.0));
    }
}
