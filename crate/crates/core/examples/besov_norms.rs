//! Onsager-critical Besov norms from spectrally shifted increments.

use onsager_lab::fields::{Grid, Spectral};
use onsager_lab::flux::{besov_norms, lacunary, shear, ShiftSet};

fn main() -> onsager_lab::Result<()> {
    let grid = Grid::new(32)?;
    let sp = Spectral::new(grid);
    let shifts = ShiftSet::log_spaced(32, 16);
    for (name, v) in [
        ("shear k = 1", shear(grid, 1, 1.0)),
        ("shear k = 4", shear(grid, 4, 1.0)),
        ("lacunary s = 1/3", lacunary(grid, 1.0 / 3.0)),
    ] {
        let est = besov_norms(&sp, &v, &[3.0, 6.0], 1.0 / 3.0, &shifts)?;
        for e in est {
            println!(
                "{name:<18} r = {}: |v|_B = {:.4} (sup increment {:.4} at |h| = {:.4})",
                e.r,
                e.norm,
                e.increment_sup,
                e.argmax.iter().map(|h| h * h).sum::<f64>().sqrt()
            );
        }
    }
    Ok(())
}
