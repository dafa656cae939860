//! The 48-line Mikado layout, its tube potentials, and steady Mikado flows.

use onsager_lab::fields::{Grid, Spectral};
use onsager_lab::mikado::{
    default_layout, LineLayout, ProfileSpec, SteadyMikado, TubeFamily, DEFAULT_R0,
};

fn main() -> onsager_lab::Result<()> {
    let layout = default_layout();
    let pair = layout.closest_pair();
    println!(
        "{} lines, closest pair {} / {} at distance {:.4} (6 r0 = {:.4})",
        layout.lines.len(),
        pair.a,
        pair.b,
        pair.distance,
        6.0 * DEFAULT_R0
    );

    let family = TubeFamily::new(layout.clone(), DEFAULT_R0, ProfileSpec::default())?;
    let probe = layout.line(0, [0, 0, 0]).base();
    let x = [probe[0], probe[1] + 0.75 * DEFAULT_R0, probe[2]];
    let t = family.eval(0, x);
    println!("psi at 3/4 r0 from line 0: {:.4}", t.psi);

    // A single tube fat enough for the grid, with spectral potentials.
    let sp = Spectral::new(Grid::new(64)?);
    let one = LineLayout {
        lines: vec![layout.lines[0]],
        seed: layout.seed,
    };
    let fat = TubeFamily::new(one, 0.25, ProfileSpec::default())?;
    let mut tube = fat.sample(0, &sp)?;
    tube.build_potentials(&sp)?;
    let report = tube.report(&sp)?;
    println!(
        "resolved tube: div Omega - psi f {:.2e}, div Omega~ - Omega {:.2e}",
        report.first_identity, report.second_identity
    );

    for (name, u) in [
        ("one tube", SteadyMikado::single(0.1, 1.0)?),
        (
            "three directions",
            SteadyMikado::three_directions(0.1, 1.0)?,
        ),
    ] {
        let v = u.sample(Grid::new(32)?);
        println!("steady {name}: sup |U| = {:.3}", v.sup_norm());
    }
    Ok(())
}
