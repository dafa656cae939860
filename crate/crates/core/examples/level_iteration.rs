//! Frequency-energy levels over 10^4 stages: key rule residual, asymptotic ratios, and the
//! effective constant B of the continuity modulus.

use onsager_lab::params::{
    asymptotics_report, default_dx_grid, fit_b, iterate, optimal_gamma, AsymptoticRatios,
    IterationConfig,
};

fn main() -> onsager_lab::Result<()> {
    for (name, config) in [
        ("gamma = 4, A = 5/2", IterationConfig::default()),
        ("gamma = 8/3, A = 3/2", IterationConfig::improved()),
    ] {
        let trace = iterate(&config)?;
        let key = trace.key_rule_relative.iter().cloned().fold(0.0, f64::max);
        println!(
            "{name}: {} stages, worst key rule residual {key:.2e}",
            trace.k_max()
        );

        println!("  {:>6} {}", "k", AsymptoticRatios::NAMES.join(" "));
        for r in asymptotics_report(&trace, &[10, 100, 1_000, 9_999]) {
            let cols: Vec<String> = r.as_array().iter().map(|x| format!("{x:.4}")).collect();
            println!("  {:>6} {}", r.k, cols.join(" "));
        }

        let fit = fit_b(&trace, &default_dx_grid(&trace, 12))?;
        for (l, b) in fit.log_inv_dx.iter().zip(&fit.b).step_by(3) {
            println!("  log |dx|^-1 = {l:10.3e}  B = {b:.4}");
        }
        println!(
            "  B target {:.5}, extrapolated {:.4}",
            fit.target, fit.extrapolated
        );
    }
    let (g, c) = optimal_gamma(2.5, 1.0, 10.0, 0.01);
    println!("closed-form coefficient is smallest at gamma = {g:.2} ({c:.5})");
    Ok(())
}
