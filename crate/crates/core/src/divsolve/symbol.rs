use num_complex::Complex64;

use crate::error::{LabError, Result};

/// `S_a^{jl}(p)` where the anti-divergence symbol is `qbar = -i S`.
#[inline]
pub fn qbar_real_part(p: [f64; 3], a: usize, j: usize, l: usize) -> f64 {
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    (p[j] * d(a, l) + p[l] * d(a, j) - p[a] * (p[j] * p[l]) / p2) / p2
}

/// Degree -1 symbol `qbar_a^{jl}(p)`, indexed `[a][j][l]`, with `i p_j qbar_a^{jl} = delta_a^l`.
pub fn qbar_symbol(p: [f64; 3]) -> Result<[[[Complex64; 3]; 3]; 3]> {
    if p == [0.0; 3] || p.iter().any(|x| !x.is_finite()) {
        return Err(LabError::ZeroVector);
    }
    let mut q = [[[Complex64::default(); 3]; 3]; 3];
    for (a, qa) in q.iter_mut().enumerate() {
        for (j, qaj) in qa.iter_mut().enumerate() {
            for (l, v) in qaj.iter_mut().enumerate() {
                *v = Complex64::new(0.0, -qbar_real_part(p, a, j, l));
            }
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn contraction(p: [f64; 3]) -> [[Complex64; 3]; 3] {
        let q = qbar_symbol(p).unwrap();
        let mut out = [[Complex64::default(); 3]; 3];
        for a in 0..3 {
            for l in 0..3 {
                for j in 0..3 {
                    out[a][l] += Complex64::new(0.0, p[j]) * q[a][j][l];
                }
            }
        }
        out
    }

    #[test]
    fn unit_vector_contraction() {
        let c = contraction([1.0, 0.0, 0.0]);
        assert_eq!(c[0][0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(matches!(qbar_symbol([0.0; 3]), Err(LabError::ZeroVector)));
    }

    proptest! {
        #[test]
        fn contraction_is_identity(p in prop::array::uniform3(-10.0f64..10.0)) {
            prop_assume!(p.iter().map(|x| x * x).sum::<f64>() > 1e-6);
            let c = contraction(p);
            for a in 0..3 {
                for l in 0..3 {
                    let want = if a == l { 1.0 } else { 0.0 };
                    prop_assert!((c[a][l] - Complex64::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn symmetric_and_homogeneous(p in prop::array::uniform3(-10.0f64..10.0)) {
            prop_assume!(p.iter().map(|x| x * x).sum::<f64>() > 1e-6);
            let q = qbar_symbol(p).unwrap();
            let q2 = qbar_symbol([2.0 * p[0], 2.0 * p[1], 2.0 * p[2]]).unwrap();
            for a in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        prop_assert_eq!(q[a][j][l], q[a][l][j]);
                        prop_assert!((q2[a][j][l] * 2.0 - q[a][j][l]).norm() <= 1e-14 * (1.0 + q[a][j][l].norm()));
                    }
                }
            }
        }
    }
}
