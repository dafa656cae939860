use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::directions::{DirectionSet, DIRECTIONS};
use crate::error::{LabError, Result};

/// Period of the first cross-section coordinate of every direction in the set.
pub const A_PERIOD: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Periodic line `p + t f` labelled by a direction and a parity class in `(Z/2Z)^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub direction: usize,
    pub class: [u8; 3],
    /// Cross-section coordinates of the base point.
    pub offset: [f64; 2],
}

impl Line {
    pub fn base(&self) -> [f64; 3] {
        let [u1, u2] = DirectionSet.cross_section(self.direction);
        std::array::from_fn(|i| self.offset[0] * u1[i] + self.offset[1] * u2[i])
    }

    pub fn label(&self) -> String {
        let f = DIRECTIONS[self.direction];
        let [a, b, c] = self.class;
        format!("(f=({},{},{}), [k]=[{a}{b}{c}])", f[0], f[1], f[2])
    }

    /// Index `8 d + class` of this line in a full layout.
    pub fn slot(&self) -> usize {
        8 * self.direction + class_index(self.class)
    }
}

pub fn class_index(class: [u8; 3]) -> usize {
    (class[0] as usize) | (class[1] as usize) << 1 | (class[2] as usize) << 2
}

pub fn class_of(index: usize) -> [u8; 3] {
    [
        (index & 1) as u8,
        (index >> 1 & 1) as u8,
        (index >> 2 & 1) as u8,
    ]
}

#[inline]
fn wrap(x: f64, period: f64) -> f64 {
    x - period * (x / period).round()
}

/// Signed cross-section coordinates of `x - base` for direction `d`, reduced to the fundamental cell.
#[inline]
pub fn cross_coords(d: usize, rel: [f64; 3]) -> [f64; 2] {
    let [u1, u2] = DirectionSet.cross_section(d);
    let a = rel[0] * u1[0] + rel[1] * u1[1] + rel[2] * u1[2];
    let b = rel[0] * u2[0] + rel[1] * u2[1] + rel[2] * u2[2];
    [wrap(a, A_PERIOD), wrap(b, 1.0)]
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Distance on the torus between two periodic lines.
pub fn line_distance(a: &Line, b: &Line) -> f64 {
    let (p, q) = (a.base(), b.base());
    let rel = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
    if a.direction == b.direction {
        let [s, t] = cross_coords(a.direction, rel);
        return s.hypot(t);
    }
    let (f, g) = (DIRECTIONS[a.direction], DIRECTIONS[b.direction]);
    let n = [
        (f[1] * g[2] - f[2] * g[1]) as i64,
        (f[2] * g[0] - f[0] * g[2]) as i64,
        (f[0] * g[1] - f[1] * g[0]) as i64,
    ];
    let period = gcd(gcd(n[0], n[1]), n[2]) as f64;
    let nf = n.map(|x| x as f64);
    let norm = (nf[0] * nf[0] + nf[1] * nf[1] + nf[2] * nf[2]).sqrt();
    wrap(rel[0] * nf[0] + rel[1] * nf[1] + rel[2] * nf[2], period).abs() / norm
}

/// The 48 lines indexed by `(f, [k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineLayout {
    pub lines: Vec<Line>,
    pub seed: u64,
}

/// Closest pair of a layout and its distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosestPair {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

impl LineLayout {
    pub fn line(&self, direction: usize, class: [u8; 3]) -> &Line {
        &self.lines[8 * direction + class_index(class)]
    }

    pub fn closest_pair(&self) -> ClosestPair {
        let mut best = ClosestPair {
            a: 0,
            b: 0,
            distance: f64::INFINITY,
        };
        for i in 0..self.lines.len() {
            for j in i + 1..self.lines.len() {
                let d = line_distance(&self.lines[i], &self.lines[j]);
                if d < best.distance {
                    best = ClosestPair {
                        a: i,
                        b: j,
                        distance: d,
                    };
                }
            }
        }
        best
    }

    /// Checks that every pair of lines is more than `6 r0` apart.
    pub fn validate_separation(&self, r0: f64) -> Result<ClosestPair> {
        let c = self.closest_pair();
        if c.distance <= 6.0 * r0 {
            return Err(LabError::InfeasibleTubes {
                a: self.lines[c.a].label(),
                b: self.lines[c.b].label(),
                dist: c.distance,
                need: 6.0 * r0,
            });
        }
        Ok(c)
    }
}

/// Seeded local search for 48 well separated lines.
///
/// Each round perturbs one line of the currently closest pair and keeps the move if that line's nearest
/// neighbour does not get closer, so the minimum separation never decreases.
pub fn place_lines(seed: u64, rounds: usize) -> LineLayout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines: Vec<Line> = (0..48)
        .map(|s| Line {
            direction: s / 8,
            class: class_of(s % 8),
            offset: [rng.gen::<f64>() * A_PERIOD, rng.gen::<f64>()],
        })
        .collect();
    let count = lines.len();
    let mut dist = vec![0.0; count * count];
    for i in 0..count {
        for j in 0..count {
            dist[i * count + j] = if i == j {
                f64::INFINITY
            } else {
                line_distance(&lines[i], &lines[j])
            };
        }
    }
    let row_min = |dist: &[f64], i: usize| {
        dist[i * count..(i + 1) * count]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    };
    let mut row = vec![0.0; count];
    for r in 0..rounds {
        let (mut a, mut b, mut worst) = (0, 0, f64::INFINITY);
        for i in 0..count {
            for j in i + 1..count {
                if dist[i * count + j] < worst {
                    (a, b, worst) = (i, j, dist[i * count + j]);
                }
            }
        }
        let i = if rng.gen::<bool>() { a } else { b };
        let step = 0.2 * (1.0 - r as f64 / rounds as f64) + 1e-3;
        let old = lines[i];
        let before = row_min(&dist, i);
        lines[i].offset = [
            (old.offset[0] + step * (rng.gen::<f64>() - 0.5)).rem_euclid(A_PERIOD),
            (old.offset[1] + step * (rng.gen::<f64>() - 0.5)).rem_euclid(1.0),
        ];
        for (j, v) in row.iter_mut().enumerate() {
            *v = if j == i {
                f64::INFINITY
            } else {
                line_distance(&lines[i], &lines[j])
            };
        }
        let after = row.iter().cloned().fold(f64::INFINITY, f64::min);
        if after >= before {
            for j in 0..count {
                dist[i * count + j] = row[j];
                dist[j * count + i] = row[j];
            }
        } else {
            lines[i] = old;
        }
    }
    LineLayout { lines, seed }
}

/// Seed and search length of the default layout.
pub const DEFAULT_LAYOUT: (u64, usize) = (2, 200_000);

/// Tube radius used with the default layout, below a sixth of its closest-pair distance.
pub const DEFAULT_R0: f64 = 0.0085;

/// The default layout, computed once per process.
pub fn default_layout() -> &'static LineLayout {
    static LAYOUT: std::sync::OnceLock<LineLayout> = std::sync::OnceLock::new();
    LAYOUT.get_or_init(|| place_lines(DEFAULT_LAYOUT.0, DEFAULT_LAYOUT.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_skew_distances() {
        let l = |d, off: [f64; 2]| Line {
            direction: d,
            class: [0; 3],
            offset: off,
        };
        // same direction, offset along the second cross-section axis
        assert!((line_distance(&l(0, [0.0, 0.0]), &l(0, [0.0, 0.3])) - 0.3).abs() < 1e-15);
        assert!((line_distance(&l(0, [0.0, 0.0]), &l(0, [0.0, 0.8])) - 0.2).abs() < 1e-15);
        // e1+e2 through the origin and e1-e2 through (0,0,z): distance z
        let a = l(0, [0.0, 0.0]);
        let b = l(1, [0.0, 0.3]);
        assert!((line_distance(&a, &b) - 0.3).abs() < 1e-15);
        assert!((line_distance(&a, &b) - line_distance(&b, &a)).abs() < 1e-15);
    }

    #[test]
    fn skew_distance_matches_brute_force() {
        let a = Line {
            direction: 0,
            class: [0; 3],
            offset: [0.1, 0.2],
        };
        let b = Line {
            direction: 2,
            class: [0; 3],
            offset: [0.33, 0.71],
        };
        let (p, q) = (a.base(), b.base());
        let (f, g) = (DirectionSet.vector(0), DirectionSet.vector(2));
        let mut best = f64::INFINITY;
        for m0 in -3..=3 {
            for m1 in -3..=3 {
                for m2 in -3..=3 {
                    let w = [
                        q[0] + m0 as f64 - p[0],
                        q[1] + m1 as f64 - p[1],
                        q[2] + m2 as f64 - p[2],
                    ];
                    let n = [
                        f[1] * g[2] - f[2] * g[1],
                        f[2] * g[0] - f[0] * g[2],
                        f[0] * g[1] - f[1] * g[0],
                    ];
                    let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                    best = best.min((w[0] * n[0] + w[1] * n[1] + w[2] * n[2]).abs() / nn);
                }
            }
        }
        assert!((line_distance(&a, &b) - best).abs() < 1e-14);
    }

    #[test]
    fn default_layout_admits_default_radius() {
        let c = default_layout().validate_separation(DEFAULT_R0).unwrap();
        assert!(c.distance > 0.054, "{}", c.distance);
    }

    #[test]
    fn search_is_deterministic_and_improves() {
        let a = place_lines(3, 2000);
        let b = place_lines(3, 2000);
        assert_eq!(a, b);
        let start = place_lines(3, 0).closest_pair().distance;
        assert!(a.closest_pair().distance > start);
    }
}
