//! Spectral operators on the periodic grid: projection to divergence-free fields, the symmetric
//! anti-divergence, mollification, and PFLD storage.

use std::f64::consts::TAU;

use onsager_lab::fields::{pfld, Grid, KernelId, PeriodicField, Rank, Spectral};

fn main() -> onsager_lab::Result<()> {
    let grid = Grid::new(32)?;
    let sp = Spectral::new(grid);
    let u = PeriodicField::from_fn(grid, Rank::Vector, |x, c| {
        (TAU * x[(c + 1) % 3]).sin() + 0.4 * (TAU * 2.0 * x[c]).cos()
    });

    // Remove the gradient part: u - grad lap^{-1} div u.
    let div = sp.divergence(&u)?;
    let phi = sp.inverse_laplacian(&div)?;
    let v = u.sub(&sp.gradient(&phi)?)?;
    println!("sup |div u| = {:.3e}", div.sup_norm());
    println!("sup |div v| = {:.3e}", sp.divergence(&v)?.sup_norm());

    // Symmetric R with div R = v.
    let r = sp.anti_divergence_sym(&v)?;
    let back = sp.divergence(&r)?.sub(&v)?;
    println!(
        "div R - v: {:.3e}, asymmetry {:.1e}",
        back.sup_norm(),
        r.symmetry_defect()
    );

    let mut m = v.clone();
    for eps in [0.2, 0.1, 0.05] {
        m = sp.mollify(&v, eps, KernelId::A)?;
        println!(
            "eps = {eps:<5} |v - v_eps|_inf = {:.3e}",
            v.sub(&m)?.sup_norm()
        );
    }

    let path = std::env::temp_dir().join("spectral_toolkit.pfld");
    let samples = [v.clone(), m.clone()];
    pfld::save(&path, &samples)?;
    println!("PFLD round trip exact: {}", pfld::load(&path)? == samples);
    Ok(())
}
