//! Coarse-grained energy flux of smooth and rough fields, with the kernel-independence verdict.

use onsager_lab::fields::{Grid, Spectral};
use onsager_lab::flux::{
    flux_report, kernel_independence_test, log_eps_grid, random_solenoidal, rough_solenoidal,
    FluxConfig,
};

fn main() -> onsager_lab::Result<()> {
    let n = 32;
    let grid = Grid::new(n)?;
    let sp = Spectral::new(grid);
    let eps = log_eps_grid(n, 0.1, 5);

    let smooth = random_solenoidal(grid, 1, 21)?;
    let cfg = FluxConfig {
        eps: eps.clone(),
        shift_magnitudes: 6,
        ..Default::default()
    };
    let report = flux_report(&sp, &smooth, &cfg)?;
    print!("{}", report.to_csv());
    for o in &report.orders {
        println!("kernel {:?}: fitted order of T_eps {:?}", o.kernel, o.flux);
    }
    if let Some(ind) = &report.independence {
        println!("smooth field: {}", ind.verdict.name());
    }

    let rough = rough_solenoidal(grid, 1.0 / 3.0, 7)?;
    let ind = kernel_independence_test(&sp, &rough, &eps, 1e-8)?;
    for s in &ind.series {
        let t: Vec<String> = s.flux.iter().map(|t| format!("{t:.3e}")).collect();
        println!("rough, kernel {:?}: T_eps = {}", s.kernel, t.join(" "));
    }
    println!("rough field: {}", ind.verdict.name());
    Ok(())
}
