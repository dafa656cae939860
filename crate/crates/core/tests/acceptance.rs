//! One PASS/FAIL line per acceptance criterion.
//!
//! Exits nonzero only when a criterion outside `KNOWN_FAILING` fails, or a known failure
//! starts passing (so the list gets updated).

use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex64;
use onsager_lab::cli::{run, Command, RunOptions};
use onsager_lab::divsolve::{moment_summary, parametrix, qbar_symbol, OscillatoryField, Phase};
use onsager_lab::divsolve::{FourierMode, Profile, MAX_ORDER};
use onsager_lab::fields::{pfld, Grid, KernelId, PeriodicField, Rank, Spectral};
use onsager_lab::flux::{
    flux_report, log_eps_grid, random_solenoidal, Coarse, FluxConfig, Verdict,
};
use onsager_lab::mikado::{
    build_step, log_log_slope, mikado_check, BuildStepConfig, MikadoCheckConfig,
};
use onsager_lab::params::{
    asymptotic_ratios, check_shrinking, default_dx_grid, fit_b, iterate, iterate_with_gains,
    leading_coefficient, optimal_gamma, passing_stress_level, support_and_c0_sums, IterationConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The asymptotic criterion cannot be met at k <= 10^4; see the decisions ledger.
const KNOWN_FAILING: &[u32] = &[3];

struct Outcome {
    pass: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, note: String) {
        self.pass &= ok;
        self.notes
            .push(if ok { note } else { format!("[fails] {note}") });
    }
}

fn key_evolution() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for (c_hat, a_exp) in [(1.0, 2.5), (std::f64::consts::E, 2.5), (20.0, 1.5)] {
        for _ in 0..10 {
            let gains: Vec<f64> = (0..10_000).map(|_| rng.gen_range(0.1..50.0)).collect();
            let config = IterationConfig {
                c_hat,
                a_exp,
                k_max: 10_000,
                ..Default::default()
            };
            let t = iterate_with_gains(&config, |k| gains[k]).expect("iteration runs");
            worst = t.key_rule_relative.iter().cloned().fold(worst, f64::max);
        }
    }
    o.check(
        worst < 1e-10,
        format!("worst relative residual {worst:.2e} < 1e-10"),
    );
    let start = Instant::now();
    iterate(&IterationConfig::default()).expect("iteration runs");
    let secs = start.elapsed().as_secs_f64();
    o.check(secs < 1.0, format!("k_max = 10^4 in {secs:.1e} s < 1 s"));
    o
}

fn borderline_constant() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    for (config, name) in [
        (IterationConfig::default(), "gamma 4"),
        (IterationConfig::improved(), "gamma 8/3"),
    ] {
        let t = iterate(&config).expect("iteration runs");
        let fit = fit_b(&t, &default_dx_grid(&t, 40)).expect("fit runs");
        let deepest = *fit.b.last().unwrap();
        let rel = (deepest - fit.target).abs() / fit.target;
        o.check(
            rel < 0.2,
            format!(
                "{name}: B {deepest:.4} vs {:.4} ({:.1}%)",
                fit.target,
                100.0 * rel
            ),
        );
        if config.gamma == 4.0 {
            let top = *fit.log_inv_dx.last().unwrap();
            let tail: Vec<f64> = fit
                .log_inv_dx
                .iter()
                .zip(&fit.b)
                .filter(|(l, _)| **l >= top / 10.0)
                .map(|(_, b)| (b - fit.target).abs())
                .collect();
            let monotone = tail.windows(2).all(|w| w[1] < w[0]);
            o.check(
                monotone && tail.len() >= 2,
                format!(
                    "distance strictly decreasing over the last decade ({} points)",
                    tail.len()
                ),
            );
        }
    }
    for (a_exp, want) in [(2.5, 4.0), (1.5, 8.0 / 3.0)] {
        let (g, _) = optimal_gamma(a_exp, 1.0, 10.0, 0.01);
        o.check(
            (g - want).abs() <= 0.05,
            format!(
                "A = {a_exp}: argmin gamma {g:.2} (coefficient {:.4})",
                leading_coefficient(g, a_exp)
            ),
        );
    }
    let secs = start.elapsed().as_secs_f64();
    o.check(secs < 10.0, format!("{secs:.2} s < 10 s"));
    o
}

fn asymptotics() -> Outcome {
    let mut o = Outcome::new();
    let t = iterate(&IterationConfig::default()).expect("iteration runs");
    let a = asymptotic_ratios(&t, 1_000).unwrap();
    let b = asymptotic_ratios(&t, 9_999).unwrap();
    for (i, name) in onsager_lab::params::AsymptoticRatios::NAMES
        .iter()
        .enumerate()
    {
        let (ra, rb) = (a.as_array()[i], b.as_array()[i]);
        o.check(
            (ra - 1.0).abs() < 0.15 && (rb - 1.0).abs() < (ra - 1.0).abs(),
            format!("{name} {ra:.4} -> {rb:.4}"),
        );
    }
    let config = IterationConfig::default();
    let level = passing_stress_level(&config, 1e-6).expect("bisection converges");
    let passing = iterate(&IterationConfig {
        log_er_init: level,
        ..config
    })
    .expect("iteration runs");
    let violations = check_shrinking(&passing).len();
    o.check(
        violations == 0,
        format!("shrinking violations {violations} at log e_R,1 = {level:.4}"),
    );
    let tail = support_and_c0_sums(&passing).support_tail_fraction(50);
    o.check(
        tail < 1e-12,
        format!("support tail after k = 50: {tail:.2e}"),
    );
    o
}

fn construction(step: &onsager_lab::mikado::BuildStepOutput, secs_step: f64) -> Outcome {
    let mut o = Outcome::new();
    let r = &step.report;
    o.check(
        (8..=16).contains(&r.lambda) && r.n == 64,
        format!("n = {}, lambda = {}", r.n, r.lambda),
    );
    o.check(
        r.divergence < 1e-9,
        format!("div V / |V| {:.2e}", r.divergence),
    );
    o.check(
        r.max_overlap <= 1,
        format!("waves per point {}", r.max_overlap),
    );
    o.check(
        r.cancellation_residual < 1e-9,
        format!("cancellation {:.2e}", r.cancellation_residual),
    );
    let start = Instant::now();
    let check = mikado_check(&MikadoCheckConfig::default()).expect("check runs");
    let secs = secs_step + start.elapsed().as_secs_f64();
    for (name, limit) in [
        ("|int psi|", 1e-12),
        ("|int psi^2 - 1|", 1e-10),
        ("tubes covering one grid point", 1.0),
        ("d_c Omega~^abc - Omega^ab (relative)", 1e-10),
        ("grid: div Omega - psi f", 1e-10),
        ("grid: div Omega~ - Omega", 1e-10),
        ("sum chi^2 - 1 after transport", 1e-6),
    ] {
        let row = check
            .rows
            .iter()
            .find(|c| c.name == name)
            .expect("row exists");
        o.check(row.value <= limit, format!("{name} {:.2e}", row.value));
    }
    o.check(
        check.all_pass,
        format!("mikado-check rows all pass ({})", check.rows.len()),
    );
    o.check(secs < 120.0, format!("{secs:.1} s < 120 s"));
    o
}

fn smooth_amplitude(grid: Grid) -> PeriodicField {
    PeriodicField::from_fn(grid, Rank::Vector, |x, c| match c {
        0 => (TAU * x[1]).sin(),
        1 => (TAU * x[2]).cos() + 0.3 * (TAU * (x[0] + x[1])).sin(),
        _ => 0.5,
    })
}

fn distorted(sp: &Spectral, a: f64) -> Phase {
    let d = PeriodicField::from_fn(sp.grid(), Rank::Vector, |x, c| {
        a * (TAU * x[(c + 1) % 3] + c as f64).sin()
    });
    Phase::from_displacement(sp, d).expect("small displacement")
}

fn parametrix_checks(step: &onsager_lab::mikado::BuildStepOutput) -> Outcome {
    let mut o = Outcome::new();
    let grid = Grid::new(32).unwrap();
    let sp = Spectral::new(grid);
    let mode = |m: [i64; 3], re: f64, im: f64| FourierMode { m, re, im };
    let profile = Profile::new(vec![
        mode([1, 0, 0], 0.5, 0.2),
        mode([-1, 0, 0], 0.5, -0.2),
        mode([0, 1, -1], 0.0, 0.3),
        mode([0, -1, 1], 0.0, -0.3),
    ])
    .unwrap();
    let mut worst = 0.0_f64;
    for phase in [Phase::identity(grid), distorted(&sp, 0.04)] {
        let field =
            OscillatoryField::new(smooth_amplitude(grid), profile.clone(), phase, 3).unwrap();
        for d in 1..=MAX_ORDER.min(4) {
            let res = parametrix(&sp, &field, d).expect("parametrix runs");
            worst = worst.max(res.diagnostics.identity_defect);
        }
    }
    o.check(
        worst < 1e-11,
        format!("identity defect {worst:.2e} (D <= 4, two frames)"),
    );

    let grid = Grid::new(64).unwrap();
    let sp = Spectral::new(grid);
    let phase = distorted(&sp, 0.03);
    let profile = Profile::cosine([1, 1, 0], 0.5).unwrap();
    let lambdas = [4u64, 8, 16];
    let sups: Vec<Vec<f64>> = lambdas
        .iter()
        .map(|&l| {
            let f =
                OscillatoryField::new(smooth_amplitude(grid), profile.clone(), phase.clone(), l)
                    .unwrap();
            parametrix(&sp, &f, 3).unwrap().diagnostics.remainder_sup
        })
        .collect();
    let xs: Vec<f64> = lambdas.iter().map(|&l| l as f64).collect();
    for d in 1..=3 {
        let ys: Vec<f64> = sups.iter().map(|s| s[d]).collect();
        let slope = log_log_slope(&xs, &ys);
        let df = d as f64;
        o.check(
            (slope + df).abs() <= 0.15 * df,
            format!("U_({d}) slope {slope:.3}"),
        );
    }

    let m = moment_summary(step).expect("moments computed");
    o.check(
        m.worst_relative < 1e-10,
        format!(
            "moments {:.2e} over {} wave and {} divergence sources",
            m.worst_relative, m.wave_sources, m.divergence_sources
        ),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let p: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-10.0..10.0));
        let q = qbar_symbol(p).unwrap();
        for a in 0..3 {
            for l in 0..3 {
                let s: Complex64 = (0..3).map(|j| Complex64::new(0.0, p[j]) * q[a][j][l]).sum();
                let want = if a == l { 1.0 } else { 0.0 };
                worst = worst.max((s - want).norm());
            }
        }
    }
    o.check(
        worst < 1e-14,
        format!("symbol identity over 1000 p: {worst:.1e}"),
    );
    o
}

fn flux_diagnostics() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let n = 64;
    let grid = Grid::new(n).unwrap();
    let sp = Spectral::new(grid);
    let v = random_solenoidal(grid, 4, 3).unwrap();
    let cfg = FluxConfig {
        eps: log_eps_grid(n, 0.03, 5),
        shift_magnitudes: 4,
        ..Default::default()
    };
    let report = flux_report(&sp, &v, &cfg).expect("report runs");
    let mut min_order = f64::INFINITY;
    for f in &report.orders {
        for p in [f.flux, f.density_norm] {
            min_order = min_order.min(p.unwrap_or(f64::NEG_INFINITY));
        }
    }
    o.check(min_order >= 1.9, format!("min fitted order {min_order:.3}"));
    o.check(report.holder_all, "Hölder chain at every eps".into());
    let ind = report.independence.as_ref().expect("two kernels");
    let limit = ind.series.iter().map(|s| s.limit.abs()).fold(0.0, f64::max);
    o.check(
        ind.verdict == Verdict::Pass && limit < 1e-8,
        format!("verdict {} with |limit| {limit:.1e}", ind.verdict.name()),
    );

    let h = [0.123, -0.377, 0.618];
    let moved = [sp.translate(&v, h), v.roll([5, 17, 40])];
    let base = Coarse::new(&sp, &v).unwrap();
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for w in &moved {
        let c = Coarse::new(&sp, w).unwrap();
        for &eps in &cfg.eps {
            for k in [KernelId::A, KernelId::B] {
                let t0 = base.level(eps, k).unwrap().flux();
                let t1 = c.level(eps, k).unwrap().flux();
                worst = worst.max((t1 - t0).abs());
                scale = scale.max(t0.abs());
            }
        }
    }
    o.check(
        worst <= 1e-12 * scale.max(1e-3),
        format!("translation changes T by {worst:.1e} (max |T| {scale:.1e})"),
    );
    let secs = start.elapsed().as_secs_f64();
    o.check(secs < 60.0, format!("{secs:.1} s < 60 s"));
    o
}

fn determinism() -> Outcome {
    let mut o = Outcome::new();
    let root = std::env::temp_dir().join(format!("onsager-lab-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&root);
    for command in [
        Command::Iterate,
        Command::Flux { field: None },
        Command::BuildStep,
    ] {
        let dirs = [
            root.join(format!("{}-a", command.name())),
            root.join(format!("{}-b", command.name())),
        ];
        let outcomes: Vec<_> = dirs
            .iter()
            .map(|d| {
                run(
                    &command,
                    &RunOptions {
                        config: None,
                        out: d.clone(),
                        seed: Some(9),
                        verbose: false,
                    },
                )
                .expect("command runs")
            })
            .collect();
        let mut same = true;
        for name in &outcomes[0].manifest.outputs {
            same &= std::fs::read(dirs[0].join(name)).unwrap()
                == std::fs::read(dirs[1].join(name)).unwrap();
        }
        let mut m = [outcomes[0].manifest.clone(), outcomes[1].manifest.clone()];
        for x in &mut m {
            x.wall_clock_seconds = 0.0;
        }
        same &= m[0] == m[1];
        o.check(
            same,
            format!(
                "{}: {} files byte-identical",
                command.name(),
                outcomes[0].manifest.outputs.len()
            ),
        );
    }

    let grid = Grid::new(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let specials = [
        0.0,
        -0.0,
        f64::MIN_POSITIVE / 3.0,
        f64::MAX,
        -1e-300,
        1.0 / 3.0,
    ];
    let samples: Vec<PeriodicField> = (0..3)
        .map(|_| {
            let mut data: Vec<f64> = (0..grid.len() * 9)
                .map(|_| rng.gen_range(-1e3..1e3))
                .collect();
            data[..specials.len()].copy_from_slice(&specials);
            PeriodicField::from_data(grid, Rank::Sym2, data).unwrap()
        })
        .collect();
    let path = root.join("round_trip.pfld");
    pfld::save(&path, &samples).unwrap();
    let back = pfld::load(&path).unwrap();
    let bits = |f: &PeriodicField| f.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let lossless = back.len() == samples.len()
        && back
            .iter()
            .zip(&samples)
            .all(|(a, b)| a.rank() == b.rank() && bits(a) == bits(b));
    o.check(
        lossless,
        "PFLD round trip bit-exact, signed zero and subnormals included".into(),
    );
    let _ = std::fs::remove_dir_all(&root);
    o
}

fn main() {
    let start = Instant::now();
    let step_start = Instant::now();
    let step = build_step(&BuildStepConfig {
        n: 64,
        ..Default::default()
    })
    .expect("n = 64 build step runs");
    let step_secs = step_start.elapsed().as_secs_f64();

    let results = [
        (1, "key evolution identity", key_evolution()),
        (2, "borderline constant B", borderline_constant()),
        (3, "iteration asymptotics", asymptotics()),
        (4, "construction invariants", construction(&step, step_secs)),
        (5, "parametrix", parametrix_checks(&step)),
        (6, "flux diagnostics", flux_diagnostics()),
        (7, "determinism and I/O", determinism()),
    ];
    let mut unexpected = Vec::new();
    for (id, name, o) in &results {
        println!(
            "{} {id} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.notes.join("; ")
        );
        if o.pass == KNOWN_FAILING.contains(id) {
            unexpected.push(*id);
        }
    }
    println!(
        "acceptance finished in {:.1} s",
        start.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        eprintln!("criteria with unexpected outcome: {unexpected:?}");
        std::process::exit(1);
    }
}
