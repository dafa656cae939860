use serde::{Deserialize, Serialize};

/// The six directions `e_i + e_j, e_i - e_j` for `i < j`, in the order
/// `e1+e2, e1-e2, e1+e3, e1-e3, e2+e3, e2-e3`.
pub const DIRECTIONS: [[i32; 3]; 6] = [
    [1, 1, 0],
    [1, -1, 0],
    [1, 0, 1],
    [1, 0, -1],
    [0, 1, 1],
    [0, 1, -1],
];

/// Index pair `(i, j)` and sign of direction `d`, so that `f = e_i + sign e_j`.
pub const fn pair_of(d: usize) -> (usize, usize, f64) {
    let (i, j) = match d / 2 {
        0 => (0, 1),
        1 => (0, 2),
        _ => (1, 2),
    };
    (i, j, if d % 2 == 0 { 1.0 } else { -1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet;

impl DirectionSet {
    pub fn len(&self) -> usize {
        DIRECTIONS.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn vector(&self, d: usize) -> [f64; 3] {
        DIRECTIONS[d].map(f64::from)
    }

    /// Orthonormal basis `(u1, u2)` of the plane orthogonal to direction `d`.
    pub fn cross_section(&self, d: usize) -> [[f64; 3]; 2] {
        let (i, j, s) = pair_of(d);
        let m = 3 - i - j;
        let mut u1 = [0.0; 3];
        u1[i] = std::f64::consts::FRAC_1_SQRT_2;
        u1[j] = -s * std::f64::consts::FRAC_1_SQRT_2;
        let mut u2 = [0.0; 3];
        u2[m] = 1.0;
        [u1, u2]
    }

    /// `sum_f f f`, which equals four times the identity.
    pub fn frame_sum(&self) -> [[f64; 3]; 3] {
        let mut s = [[0.0; 3]; 3];
        for d in 0..6 {
            let f = self.vector(d);
            for (a, row) in s.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    *v += f[a] * f[b];
                }
            }
        }
        s
    }

    /// Determinant of the Gram matrix of the six tensors `f f` in the symmetric-matrix inner product.
    pub fn gram_determinant(&self) -> f64 {
        let mut g = [[0.0; 6]; 6];
        for (p, row) in g.iter_mut().enumerate() {
            for (q, v) in row.iter_mut().enumerate() {
                let (a, b) = (self.vector(p), self.vector(q));
                let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                *v = dot * dot;
            }
        }
        determinant(g)
    }

    /// Coefficients `c_f` with `sum_f c_f f f = m` for a symmetric `m`.
    pub fn decompose(&self, m: &[[f64; 3]; 3]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (d, v) in out.iter_mut().enumerate() {
            let (i, j, s) = pair_of(d);
            let k = 3 - i - j;
            let diag = 0.5 * (m[i][i] + m[j][j] - m[k][k]);
            *v = 0.5 * (diag + s * m[i][j]);
        }
        out
    }
}

fn determinant<const N: usize>(mut a: [[f64; N]; N]) -> f64 {
    let mut det = 1.0;
    for c in 0..N {
        let p = (c..N)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..N {
            let factor = a[r][c] / a[c][c];
            for k in c..N {
                a[r][k] -= factor * a[c][k];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_independent_directions() {
        let f = DirectionSet;
        assert_eq!(f.len(), 6);
        assert!(f.gram_determinant().abs() > 1.0);
        let s = f.frame_sum();
        for (a, row) in s.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                assert_eq!(*v, if a == b { 4.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn cross_section_is_orthonormal_and_orthogonal() {
        let f = DirectionSet;
        for d in 0..6 {
            let [u1, u2] = f.cross_section(d);
            let v = f.vector(d);
            let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            assert!(dot(u1, v).abs() < 1e-15 && dot(u2, v).abs() < 1e-15);
            assert!((dot(u1, u1) - 1.0).abs() < 1e-15 && dot(u1, u2) == 0.0);
        }
    }

    #[test]
    fn decomposition_round_trip() {
        let f = DirectionSet;
        let m = [[3.0, 0.2, -0.4], [0.2, 2.5, 0.1], [-0.4, 0.1, 2.0]];
        let c = f.decompose(&m);
        let mut back = [[0.0; 3]; 3];
        for (d, cd) in c.iter().enumerate() {
            let v = f.vector(d);
            for a in 0..3 {
                for b in 0..3 {
                    back[a][b] += cd * v[a] * v[b];
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                assert!((back[a][b] - m[a][b]).abs() < 1e-14);
            }
        }
        let iso = f.decompose(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(iso.iter().all(|c| (c - 0.25).abs() < 1e-15));
    }
}
