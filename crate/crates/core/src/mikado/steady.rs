//! Steady pressureless Mikado flow `U = sum_i a_i psi_i f_i` from tubes with disjoint supports.

use super::directions::DirectionSet;
use super::lines::{cross_coords, line_distance, Line, A_PERIOD};
use super::tube::{ProfileSpec, RadialProfile};
use crate::error::{LabError, Result};
use crate::fields::{EulerReynoldsState, Grid, PeriodicField, Rank};

#[derive(Debug, Clone)]
pub struct SteadyMikado {
    pub lines: Vec<Line>,
    pub amplitudes: Vec<f64>,
    pub profile: RadialProfile,
}

impl SteadyMikado {
    /// Requires every pair of lines more than `2 r0` apart.
    pub fn new(lines: Vec<Line>, amplitudes: Vec<f64>, r0: f64, spec: ProfileSpec) -> Result<Self> {
        if lines.len() != amplitudes.len() || lines.is_empty() {
            return Err(LabError::Config(
                "one amplitude per line, at least one line".into(),
            ));
        }
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let d = line_distance(&lines[i], &lines[j]);
                if d <= 2.0 * r0 {
                    return Err(LabError::InfeasibleTubes {
                        a: lines[i].label(),
                        b: lines[j].label(),
                        dist: d,
                        need: 2.0 * r0,
                    });
                }
            }
        }
        Ok(Self {
            lines,
            amplitudes,
            profile: RadialProfile::new(r0, spec)?,
        })
    }

    /// One tube along `e1 + e2` through the origin.
    pub fn single(r0: f64, amplitude: f64) -> Result<Self> {
        let line = Line {
            direction: 0,
            class: [0; 3],
            offset: [0.0, 0.0],
        };
        Self::new(vec![line], vec![amplitude], r0, ProfileSpec::default())
    }

    /// Three tubes along `e1 + e2`, `e1 - e2`, `e2 + e3` with offsets on a 1/8 lattice chosen for separation.
    pub fn three_directions(r0: f64, amplitude: f64) -> Result<Self> {
        let first = Line {
            direction: 0,
            class: [0; 3],
            offset: [0.0, 0.0],
        };
        let candidates = |d: usize| {
            (0..8).flat_map(move |a| {
                (0..8).map(move |b| Line {
                    direction: d,
                    class: [0; 3],
                    offset: [A_PERIOD * a as f64 / 8.0, b as f64 / 8.0],
                })
            })
        };
        let mut best = (f64::NEG_INFINITY, first, first);
        for second in candidates(1) {
            let d01 = line_distance(&first, &second);
            for third in candidates(4) {
                let m = d01
                    .min(line_distance(&first, &third))
                    .min(line_distance(&second, &third));
                if m > best.0 + 1e-12 {
                    best = (m, second, third);
                }
            }
        }
        Self::new(
            vec![first, best.1, best.2],
            vec![amplitude; 3],
            r0,
            ProfileSpec::default(),
        )
    }

    /// Smallest pairwise line distance.
    pub fn separation(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.lines.len() {
            for j in i + 1..self.lines.len() {
                m = m.min(line_distance(&self.lines[i], &self.lines[j]));
            }
        }
        m
    }

    pub fn value(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (line, a) in self.lines.iter().zip(&self.amplitudes) {
            let b = line.base();
            let [s, t] = cross_coords(line.direction, [x[0] - b[0], x[1] - b[1], x[2] - b[2]]);
            let rho = s.hypot(t);
            if rho > 0.5 * self.profile.r0 && rho < self.profile.r0 {
                let psi = self.profile.radial(rho).psi;
                let f = DirectionSet.vector(line.direction);
                for c in 0..3 {
                    out[c] += a * psi * f[c];
                }
            }
        }
        out
    }

    /// Point samples, with no smoothing or normalization so supports stay exactly disjoint.
    pub fn sample(&self, grid: Grid) -> PeriodicField {
        let mut u = PeriodicField::zeros(grid, Rank::Vector);
        for idx in 0..grid.len() {
            let v = self.value(grid.point(idx));
            for c in 0..3 {
                u.comp_mut(c)[idx] = v[c];
            }
        }
        u
    }

    /// `(U, 0, 0)` frozen in time.
    pub fn state(&self, grid: Grid, samples: usize, dt: f64) -> Result<EulerReynoldsState> {
        EulerReynoldsState::steady(
            self.sample(grid),
            PeriodicField::zeros(grid, Rank::Scalar),
            PeriodicField::zeros(grid, Rank::Sym2),
            samples,
            dt,
        )
    }
}
