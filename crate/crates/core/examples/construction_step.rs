//! One convex integration step on a synthetic Euler-Reynolds flow.

use onsager_lab::mikado::{build_step, BuildStepConfig};

fn main() -> onsager_lab::Result<()> {
    let out = build_step(&BuildStepConfig::default())?;
    let r = &out.report;
    println!(
        "n = {}, lambda = {}, {} members, {} waves",
        r.n, r.lambda, r.members, r.waves
    );
    println!(
        "stress cancellation residual {:.2e}",
        r.cancellation_residual
    );
    println!("sup |div V| / sup |V|        {:.2e}", r.divergence);
    println!("sum chi^2 - 1                {:.2e}", r.partition_defect);
    println!("waves covering one point     {}", r.max_overlap);
    println!(
        "residual in / out            {:.2e} / {:.2e}",
        r.residual_input, r.residual_output
    );
    for (l, q) in r.correction.lambdas.iter().zip(&r.correction.ratios) {
        println!("  lambda {l:>3}: |dV| / |V~| = {q:.3e}");
    }
    Ok(())
}
