//! Seeded test velocities for the flux diagnostics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::fields::{Grid, PeriodicField, Rank, Spectral};

/// Divergence-free, mean-zero field with every `|k_i| <= band`, unit rms.
///
/// Coefficients are uniform in the unit square with a `|k|^-2` envelope, projected off `k`,
/// then made Hermitian.
pub fn random_solenoidal(grid: Grid, band: usize, seed: u64) -> Result<PeriodicField> {
    let n = grid.n();
    if band == 0 || 2 * band >= n {
        return Err(LabError::Config(format!(
            "band {band} must lie in 1..{} for n = {n}",
            n / 2
        )));
    }
    let b = band as i64;
    solenoidal_with(grid, seed, |k, k2| {
        if k.iter().any(|&ki| ki.abs() > b) {
            0.0
        } else {
            1.0 / k2
        }
    })
}

/// Random-phase solenoidal field with shell spectrum `|k|^{-s}` in amplitude per unit shell,
/// i.e. mode amplitudes `|k|^{-s-3/2}`, for every `|k_i| < n/3`; unit rms.
///
/// Unlike `lacunary`, its octaves interact, so the flux is generically nonzero.
pub fn rough_solenoidal(grid: Grid, s: f64, seed: u64) -> Result<PeriodicField> {
    let cut = grid.n() as i64 / 3;
    solenoidal_with(grid, seed, |k, k2| {
        if k.iter().any(|&ki| ki.abs() >= cut) {
            0.0
        } else {
            k2.powf(-0.5 * s - 0.75)
        }
    })
}

fn solenoidal_with(
    grid: Grid,
    seed: u64,
    envelope: impl Fn([i64; 3], f64) -> f64,
) -> Result<PeriodicField> {
    let n = grid.n();
    let sp = Spectral::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = vec![vec![Complex64::default(); grid.len()]; 3];
    for idx in 0..grid.len() {
        let k = sp.kint(idx);
        if k == [0, 0, 0] || sp.has_nyquist(idx) {
            continue;
        }
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        let amp = envelope(k, k2);
        if amp == 0.0 {
            continue;
        }
        let mut a = [Complex64::default(); 3];
        for z in a.iter_mut() {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
        }
        let kd = [k[0] as f64, k[1] as f64, k[2] as f64];
        let dot = a[0] * kd[0] + a[1] * kd[1] + a[2] * kd[2];
        for c in 0..3 {
            spec[c][idx] = a[c] - dot * kd[c] / k2;
        }
    }
    // (a(k) + conj a(-k)) / 2 makes the inverse exactly real.
    let neg = |idx: usize| {
        let [i, j, l] = grid.unflatten(idx);
        grid.index((n - i) % n, (n - j) % n, (n - l) % n)
    };
    let comps: Vec<Vec<f64>> = spec
        .iter()
        .map(|s| {
            let herm: Vec<Complex64> = (0..grid.len())
                .map(|idx| 0.5 * (s[idx] + s[neg(idx)].conj()))
                .collect();
            sp.inverse_real(herm)
        })
        .collect();
    let mut v = PeriodicField::from_components(grid, Rank::Vector, comps)?;
    let rms = v.lp_norm(2.0);
    if rms == 0.0 {
        return Err(LabError::Config("random field vanished".into()));
    }
    v.scale(1.0 / rms);
    Ok(v)
}

/// `sum_{2^j <= n/4} 2^{-j s} sin(2 pi 2^j x_{c+1}) e_c`, divergence-free since component `c`
/// does not depend on `x_c`.
pub fn lacunary(grid: Grid, s: f64) -> PeriodicField {
    let n = grid.n();
    let mut octaves = Vec::new();
    let mut f = 1usize;
    while 4 * f <= n {
        octaves.push(f);
        f *= 2;
    }
    PeriodicField::from_fn(grid, Rank::Vector, |x, c| {
        octaves
            .iter()
            .map(|&f| (f as f64).powf(-s) * (2.0 * PI * f as f64 * x[(c + 1) % 3]).sin())
            .sum()
    })
}

/// Single shear mode `amp sin(2 pi k x_2) e_1`.
pub fn shear(grid: Grid, k: usize, amp: f64) -> PeriodicField {
    PeriodicField::from_fn(grid, Rank::Vector, |x, c| {
        if c == 0 {
            amp * (2.0 * PI * k as f64 * x[1]).sin()
        } else {
            0.0
        }
    })
}
