use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quad::gauss_legendre;

/// Radial mollifier profiles supported in the unit ball.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelId {
    /// `exp(-1/(1-r^2))`
    #[default]
    A,
    /// `(1-r^2)^6`
    B,
}

impl KernelId {
    pub fn profile(self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - r * r;
        match self {
            KernelId::A => (-1.0 / s).exp(),
            KernelId::B => s.powi(6),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelId::A => "A",
            KernelId::B => "B",
        }
    }
}

/// Fourier transform of a unit-mass radial kernel by radial quadrature.
#[derive(Debug, Clone)]
pub struct KernelTransform {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const NODES: usize = 256;

impl KernelTransform {
    pub fn new(kernel: KernelId) -> Self {
        let (r, w) = gauss_legendre(NODES, 0.0, 1.0);
        let weights: Vec<f64> = r
            .iter()
            .zip(&w)
            .map(|(&r, &w)| 4.0 * PI * w * r * r * kernel.profile(r))
            .collect();
        let mass: f64 = weights.iter().sum();
        Self {
            nodes: r,
            weights: weights.into_iter().map(|w| w / mass).collect(),
        }
    }

    /// `eta_hat(xi) = int eta(h) exp(-i xi.h) dh` for `|xi| = xi`.
    pub fn eval(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            return self.weights.iter().sum();
        }
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| {
                let z = xi * r;
                w * if z.abs() < 1e-8 {
                    1.0 - z * z / 6.0
                } else {
                    z.sin() / z
                }
            })
            .sum()
    }

    /// Second radial moment `int |h|^2 eta(h) dh`.
    pub fn second_moment(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * r * r)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mass_and_decay() {
        for id in [KernelId::A, KernelId::B] {
            let t = KernelTransform::new(id);
            assert!((t.eval(0.0) - 1.0).abs() < 1e-14);
            assert!(t.eval(1e-3) < 1.0);
            // small-argument expansion 1 - xi^2 m2 / 6
            let xi = 1e-3;
            let approx = 1.0 - xi * xi * t.second_moment() / 6.0;
            assert!((t.eval(xi) - approx).abs() < 1e-12);
        }
    }

    #[test]
    fn kernels_differ() {
        let a = KernelTransform::new(KernelId::A);
        let b = KernelTransform::new(KernelId::B);
        assert!((a.eval(5.0) - b.eval(5.0)).abs() > 1e-3);
    }
}
