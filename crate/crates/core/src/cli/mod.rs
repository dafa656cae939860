//! Batch commands behind the `onsager-lab` binary: config loading, runs, and output files.

mod config;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{
    BuildStepSection, FluxSection, IterateSection, LabConfig, SyntheticField, CONFIG_VERSION,
};
pub use manifest::{RunManifest, Versions};

use crate::divsolve::{build_step_sweep, moment_summary, MomentSummary, RemainderSweep};
use crate::error::{LabError, Result};
use crate::fields::{pfld, Grid, PeriodicField, Spectral};
use crate::flux::{calibrate_bound, flux_report, FluxConfig};
use crate::mikado::{build_step, mikado_check, BuildStepReport, CheckRow};
use crate::params::summarize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Iterate,
    BuildStep,
    /// Flux diagnostics of a PFLD velocity file, or of the configured synthetic field.
    Flux {
        field: Option<PathBuf>,
    },
    MikadoCheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Iterate => "iterate",
            Command::BuildStep => "build-step",
            Command::Flux { .. } => "flux",
            Command::MikadoCheck => "mikado-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub verbose: bool,
}

/// What a finished command produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.manifest.passed
    }
}

/// Output directory plus the list of files written so far.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }

    fn fields(&mut self, name: &str, samples: &[PeriodicField]) -> Result<()> {
        pfld::save(self.dir.join(name), samples)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

fn log(opts: &RunOptions, msg: impl AsRef<str>) {
    if opts.verbose {
        eprintln!("[onsager-lab] {}", msg.as_ref());
    }
}

/// Runs one command and writes its outputs and `manifest.json` under `opts.out`.
pub fn run(command: &Command, opts: &RunOptions) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut config = match &opts.config {
        Some(path) => LabConfig::load(path)?,
        None => LabConfig::default(),
    };
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    config.validate()?;
    log(
        opts,
        format!("{} with seed {}", command.name(), config.seed),
    );
    let mut out = Outputs::new(&opts.out)?;
    let mut inputs = Vec::new();
    let mut tolerances = std::collections::BTreeMap::new();
    let checks = match command {
        Command::Iterate => run_iterate(&config, opts, &mut out, &mut tolerances)?,
        Command::BuildStep => run_build_step(&config, opts, &mut out, &mut tolerances)?,
        Command::Flux { field } => {
            if let Some(f) = field {
                inputs.push(f.display().to_string());
            }
            run_flux(&config, field.as_deref(), opts, &mut out, &mut tolerances)?
        }
        Command::MikadoCheck => run_mikado_check(&config, opts, &mut out, &mut tolerances)?,
    };
    for c in &checks {
        log(opts, c.line());
    }
    let manifest = RunManifest {
        command: command.name().to_string(),
        config: serde_json::to_value(&config)?,
        seed: config.seed,
        inputs,
        outputs: out.written.clone(),
        versions: Versions::current(),
        tolerances,
        passed: checks.iter().all(|c| c.pass),
        checks,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let manifest_path = opts.out.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    fs::write(&manifest_path, body)?;
    Ok(RunOutcome {
        manifest,
        manifest_path,
    })
}

type Tolerances = std::collections::BTreeMap<String, f64>;

fn run_iterate(
    config: &LabConfig,
    opts: &RunOptions,
    out: &mut Outputs,
    tol: &mut Tolerances,
) -> Result<Vec<CheckRow>> {
    let section = &config.iterate;
    let (trace, summary) = summarize(&section.levels, section.dx_points)?;
    log(
        opts,
        format!(
            "k_max {}, B extrapolated {:.4} (target {:.4})",
            trace.k_max(),
            summary.b_estimates.extrapolated,
            summary.b_target
        ),
    );
    out.text("trace.csv", &trace.to_csv())?;
    out.json("summary.json", &summary)?;
    tol.insert("key_rule_relative".into(), section.key_rule_tolerance);
    tol.insert("b_relative".into(), section.b_tolerance);
    let deepest = *summary.b_estimates.b.last().expect("nonempty dx grid");
    let b_rel = (deepest - summary.b_target).abs() / summary.b_target;
    Ok(vec![
        CheckRow::at_most(
            "key evolution residual (relative)",
            summary.max_key_rule_relative,
            section.key_rule_tolerance,
        ),
        CheckRow::at_most(
            "|B(deepest dx) - target| / target",
            b_rel,
            section.b_tolerance,
        ),
        CheckRow::at_most(
            "shrinking violations",
            summary.shrinking_violations as f64,
            0.0,
        ),
    ])
}

#[derive(serde::Serialize)]
struct BuildStepSummary<'a> {
    report: &'a BuildStepReport,
    moments: &'a MomentSummary,
    sweep: Option<&'a RemainderSweep>,
    checks: &'a [CheckRow],
}

fn run_build_step(
    config: &LabConfig,
    opts: &RunOptions,
    out: &mut Outputs,
    tol: &mut Tolerances,
) -> Result<Vec<CheckRow>> {
    let section = &config.build_step;
    let step = build_step(&section.step)?;
    let r = &step.report;
    log(
        opts,
        format!("lambda {}, {} waves, Pi {}", r.lambda, r.waves, r.pi),
    );
    let moments = moment_summary(&step)?;
    let sweep = if section.sweep_lambdas.is_empty() {
        None
    } else {
        let sp = Spectral::new(Grid::new(section.step.n)?);
        build_step_sweep(
            &sp,
            &step,
            &section.sweep_lambdas,
            section.parametrix_order,
            section.stress_order,
        )?
    };
    let t = &section.tolerances;
    for (k, v) in [
        ("cancellation", t.cancellation),
        ("divergence", t.divergence),
        ("partition", t.partition),
        ("residual", t.residual),
        ("moments", t.moments),
        ("identity", t.identity),
    ] {
        tol.insert(k.into(), v);
    }
    let mut checks = vec![
        CheckRow::at_most(
            "stress cancellation residual",
            r.cancellation_residual,
            t.cancellation,
        ),
        CheckRow::at_most("sup |div V| / sup |V|", r.divergence, t.divergence),
        CheckRow::at_most("waves covering one point", r.max_overlap as f64, 1.0),
        CheckRow::at_most("sum chi^2 - 1", r.partition_defect, t.partition),
        CheckRow::at_most(
            "output residual / (1 + |R_H|)",
            r.residual_output / (1.0 + r.pieces.r_h.iter().cloned().fold(0.0, f64::max)),
            t.residual,
        ),
        CheckRow::at_most(
            "source moments (relative)",
            moments.worst_relative,
            t.moments,
        ),
    ];
    if let Some(s) = &sweep {
        let worst = s
            .diagnostics
            .iter()
            .map(|d| d.identity_defect)
            .fold(0.0, f64::max);
        checks.push(CheckRow::at_most(
            "parametrix identity defect",
            worst,
            t.identity,
        ));
    }
    if section.write_fields {
        out.fields("v1.pfld", &step.output.v)?;
        out.fields("p1.pfld", &step.output.p)?;
        out.fields("r1.pfld", &step.output.r)?;
        out.fields("r_m.pfld", &step.pieces.r_m)?;
        out.fields("r_s.pfld", &step.pieces.r_s)?;
        out.fields("r_t.pfld", &step.pieces.r_t)?;
        out.fields("r_h.pfld", &step.pieces.r_h)?;
    }
    let mut csv = String::from("lambda,correction_ratio\n");
    for (l, q) in r.correction.lambdas.iter().zip(&r.correction.ratios) {
        csv.push_str(&format!("{l},{q:e}\n"));
    }
    out.text("correction.csv", &csv)?;
    if let Some(s) = &sweep {
        let mut csv = String::from("lambda,stress_sup");
        for k in 0..s.remainder_sup.first().map_or(0, |v| v.len()) {
            csv.push_str(&format!(",u{k}_sup"));
        }
        csv.push('\n');
        for (i, l) in s.lambdas.iter().enumerate() {
            csv.push_str(&format!("{l},{:e}", s.stress_sup[i]));
            for v in &s.remainder_sup[i] {
                csv.push_str(&format!(",{v:e}"));
            }
            csv.push('\n');
        }
        out.text("remainders.csv", &csv)?;
    }
    out.json(
        "build_step.json",
        &BuildStepSummary {
            report: r,
            moments: &moments,
            sweep: sweep.as_ref(),
            checks: &checks,
        },
    )?;
    Ok(checks)
}

fn run_flux(
    config: &LabConfig,
    field: Option<&Path>,
    opts: &RunOptions,
    out: &mut Outputs,
    tol: &mut Tolerances,
) -> Result<Vec<CheckRow>> {
    let section = &config.flux;
    let v = match field {
        Some(path) => {
            let samples = pfld::load(path)?;
            let count = samples.len();
            samples.into_iter().nth(section.sample).ok_or_else(|| {
                LabError::Format(format!(
                    "sample {} requested, file holds {count}",
                    section.sample
                ))
            })?
        }
        None => {
            let v = section.synthetic.build(config.seed)?;
            out.fields("field.pfld", std::slice::from_ref(&v))?;
            v
        }
    };
    v.expect_rank(crate::fields::Rank::Vector)?;
    let sp = Spectral::new(v.grid());
    let mut settings: FluxConfig = section.settings.clone();
    if let Some(reference) = &section.calibrate_on {
        let r = reference.build(config.seed)?;
        if r.grid() != v.grid() {
            return Err(LabError::GridMismatch(r.grid().n(), v.grid().n()));
        }
        let c = calibrate_bound(&sp, &r, &settings)?;
        log(opts, format!("calibrated bound constant {c:.4e}"));
        settings.bound_constant = Some(c);
    }
    let report = flux_report(&sp, &v, &settings)?;
    out.text("flux.csv", &report.to_csv())?;
    out.text("flux.json", &(report.to_json()? + "\n"))?;
    tol.insert("independence".into(), settings.tolerance);
    let mut checks = vec![CheckRow::at_least(
        "Hölder chain holds at every eps",
        f64::from(u8::from(report.holder_all)),
        1.0,
    )];
    if let Some(b) = report.bound_holds {
        checks.push(CheckRow::at_least(
            "density within calibrated bound",
            f64::from(u8::from(b)),
            1.0,
        ));
    }
    let e = &section.expect;
    if let Some(m) = e.max_abs_flux {
        tol.insert("max_abs_flux".into(), m);
        checks.push(CheckRow::at_most("max |T_eps|", report.max_abs_flux(), m));
    }
    if let Some(p) = e.min_order {
        tol.insert("min_order".into(), p);
        let worst = report
            .orders
            .iter()
            .flat_map(|o| [o.flux, o.density_norm])
            .map(|x| x.unwrap_or(f64::NEG_INFINITY))
            .fold(f64::INFINITY, f64::min);
        checks.push(CheckRow::at_least("fitted eps-order", worst, p));
    }
    if e.verdict_pass {
        let pass = report
            .independence
            .as_ref()
            .is_some_and(|i| i.verdict == crate::flux::Verdict::Pass);
        checks.push(CheckRow::at_least(
            "kernel independence PASS",
            f64::from(u8::from(pass)),
            1.0,
        ));
    }
    if let Some(ind) = &report.independence {
        log(opts, format!("kernel independence {}", ind.verdict.name()));
    }
    Ok(checks)
}

fn run_mikado_check(
    config: &LabConfig,
    opts: &RunOptions,
    out: &mut Outputs,
    tol: &mut Tolerances,
) -> Result<Vec<CheckRow>> {
    let mut cfg = config.mikado_check.clone();
    cfg.seed = config.seed;
    let report = mikado_check(&cfg)?;
    log(opts, report.table());
    out.text("mikado_check.txt", &report.table())?;
    out.json("mikado_check.json", &report)?;
    for r in &report.rows {
        tol.insert(r.name.clone(), r.limit);
    }
    let mut checks = report.rows.clone();
    checks.push(CheckRow::at_least(
        "tubes passing",
        report.tubes_passing as f64,
        report.tubes as f64,
    ));
    Ok(checks)
}
