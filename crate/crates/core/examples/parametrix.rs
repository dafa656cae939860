//! Nonstationary-phase anti-divergence of an oscillatory vector field on a distorted frame.

use std::f64::consts::TAU;

use onsager_lab::divsolve::{parametrix, qbar_symbol, OscillatoryField, Phase, Profile};
use onsager_lab::fields::{Grid, PeriodicField, Rank, Spectral};

fn main() -> onsager_lab::Result<()> {
    let grid = Grid::new(64)?;
    let sp = Spectral::new(grid);
    let d = PeriodicField::from_fn(grid, Rank::Vector, |x, c| {
        0.03 * (TAU * x[(c + 1) % 3] + c as f64).sin()
    });
    let phase = Phase::from_displacement(&sp, d)?;
    let amplitude = PeriodicField::from_fn(grid, Rank::Vector, |x, c| match c {
        0 => (TAU * x[1]).sin(),
        1 => (TAU * x[2]).cos(),
        _ => 0.5,
    });
    let profile = Profile::cosine([1, 1, 0], 0.5)?;

    println!("lambda  identity   |U_1|      |U_2|      |U_3|");
    for lambda in [4, 8, 16] {
        let field =
            OscillatoryField::new(amplitude.clone(), profile.clone(), phase.clone(), lambda)?;
        let res = parametrix(&sp, &field, 3)?;
        let d = &res.diagnostics;
        println!(
            "{lambda:>6}  {:.1e}  {:.3e}  {:.3e}  {:.3e}",
            d.identity_defect, d.remainder_sup[1], d.remainder_sup[2], d.remainder_sup[3]
        );
    }

    let q = qbar_symbol([0.3, -1.2, 2.0])?;
    println!("qbar^{{000}}(p) = {:.4}", q[0][0][0]);
    Ok(())
}
