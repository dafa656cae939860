//! Geometry invariants of the tube family and the partition, as a pass/fail table.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::directions::DirectionSet;
use super::frame::{advect_frame, cellular_flow, FrameConfig};
use super::lines::{place_lines, ClosestPair, Line, LineLayout, DEFAULT_LAYOUT, DEFAULT_R0};
use super::partition::Partition;
use super::tube::{ProfileSpec, TubeFamily};
use crate::error::{LabError, Result};
use crate::fields::{c2, c3, Grid, PeriodicField, Rank, Spectral};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MikadoCheckConfig {
    pub r0: f64,
    pub layout_seed: u64,
    pub layout_rounds: usize,
    pub profile_exponent: u32,
    /// Frequency whose admissible partition is checked, unless `pi` is given.
    pub xi: f64,
    pub pi: Option<usize>,
    pub n: usize,
    /// Random support points per tube for the pointwise identities.
    pub points_per_tube: usize,
    pub seed: u64,
    /// Radius of the single grid-resolved tube whose potentials are computed spectrally.
    pub resolved_r0: f64,
    pub transport_steps: usize,
    pub transport_dt: f64,
    pub flow_amplitude: f64,
}

impl Default for MikadoCheckConfig {
    fn default() -> Self {
        Self {
            r0: DEFAULT_R0,
            layout_seed: DEFAULT_LAYOUT.0,
            layout_rounds: DEFAULT_LAYOUT.1,
            profile_exponent: ProfileSpec::default().exponent,
            xi: 2.0,
            pi: None,
            n: 64,
            points_per_tube: 64,
            seed: 0,
            resolved_r0: 0.25,
            transport_steps: 100,
            transport_dt: 0.001,
            flow_amplitude: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl CheckRow {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            bound: Bound::AtMost,
            pass: value <= limit,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            bound: Bound::AtLeast,
            pass: value >= limit,
        }
    }

    pub fn line(&self) -> String {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        format!(
            "{} {:<40} {:>12.4e} {op} {:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.limit
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MikadoCheckReport {
    pub config: MikadoCheckConfig,
    pub closest_pair: ClosestPair,
    pub closest_labels: (String, String),
    pub tubes: usize,
    /// Tubes whose own integrals and pointwise identities all pass.
    pub tubes_passing: usize,
    pub pi: usize,
    pub rows: Vec<CheckRow>,
    pub all_pass: bool,
}

impl MikadoCheckReport {
    pub fn table(&self) -> String {
        let mut out = format!(
            "tubes {}/{} pass, closest pair {} {} at {:.5}, Pi = {}\n",
            self.tubes_passing,
            self.tubes,
            self.closest_labels.0,
            self.closest_labels.1,
            self.closest_pair.distance,
            self.pi
        );
        for r in &self.rows {
            out.push_str(&r.line());
            out.push('\n');
        }
        out
    }
}

/// Point at distance `rho` and angle `theta` from `line`, a fraction `s` along one period.
fn support_point(line: &Line, rho: f64, theta: f64, s: f64) -> [f64; 3] {
    let b = line.base();
    let f = DirectionSet.vector(line.direction);
    let [u1, u2] = DirectionSet.cross_section(line.direction);
    std::array::from_fn(|i| b[i] + s * f[i] + rho * (theta.cos() * u1[i] + theta.sin() * u2[i]))
}

struct TubeResiduals {
    mean: f64,
    norm: f64,
    orthogonality: f64,
    second_identity: f64,
    antisymmetry: f64,
}

fn tube_residuals(
    family: &TubeFamily,
    slot: usize,
    rng: &mut ChaCha8Rng,
    points: usize,
) -> TubeResiduals {
    let p = &family.profile;
    let r0 = p.r0;
    let line = &family.layout.lines[slot];
    let f = DirectionSet.vector(line.direction);
    let mut out = TubeResiduals {
        mean: p.torus_integral(|r| p.radial(r).psi).abs(),
        norm: (p.torus_integral(|r| p.radial(r).psi.powi(2)) - 1.0).abs(),
        orthogonality: 0.0,
        second_identity: 0.0,
        antisymmetry: 0.0,
    };
    for _ in 0..points {
        let rho = r0 * rng.gen_range(0.5..1.0);
        let x = support_point(
            line,
            rho,
            rng.gen_range(0.0..2.0 * PI),
            rng.gen_range(0.0..1.0),
        );
        let v = family.eval(slot, x);
        let dv = family.omega_tilde_gradient(slot, x);
        let gsup = v.grad_psi.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gsup > 0.0 {
            let dot = v.grad_psi[0] * f[0] + v.grad_psi[1] * f[1] + v.grad_psi[2] * f[2];
            out.orthogonality = out.orthogonality.max(dot.abs() / gsup);
        }
        let osup = v.omega.iter().fold(0.0_f64, |m, o| m.max(o.abs()));
        for a in 0..3 {
            for b in 0..3 {
                let s: f64 = (0..3).map(|c| dv[27 * c + c3(a, b, c)]).sum();
                if osup > 0.0 {
                    out.second_identity = out
                        .second_identity
                        .max((s - v.omega[c2(a, b)]).abs() / osup);
                }
                out.antisymmetry = out
                    .antisymmetry
                    .max((v.omega[c2(a, b)] + v.omega[c2(b, a)]).abs());
            }
        }
    }
    out
}

pub fn mikado_check(cfg: &MikadoCheckConfig) -> Result<MikadoCheckReport> {
    let grid = Grid::new(cfg.n)?;
    let partition = match cfg.pi {
        Some(pi) => Partition::new(pi, cfg.xi)?,
        None => Partition::for_frequency(cfg.xi)?,
    };
    if cfg.points_per_tube == 0 || cfg.transport_steps == 0 {
        return Err(LabError::Config(
            "points_per_tube and transport_steps must be positive".into(),
        ));
    }
    let layout: LineLayout = if (cfg.layout_seed, cfg.layout_rounds) == DEFAULT_LAYOUT {
        super::lines::default_layout().clone()
    } else {
        place_lines(cfg.layout_seed, cfg.layout_rounds)
    };
    let spec = ProfileSpec {
        exponent: cfg.profile_exponent,
    };
    let family = TubeFamily::new(layout, cfg.r0, spec)?;
    let closest = family.layout.closest_pair();
    let mut rows = vec![CheckRow::at_least(
        "closest pair / 6 r0",
        closest.distance / (6.0 * cfg.r0),
        1.0,
    )];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut mean, mut norm, mut orth, mut second, mut anti) =
        (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut passing = 0;
    for slot in 0..family.len() {
        let t = tube_residuals(&family, slot, &mut rng, cfg.points_per_tube);
        if t.mean < 1e-12
            && t.norm < 1e-10
            && t.orthogonality < 1e-12
            && t.second_identity < 1e-10
            && t.antisymmetry == 0.0
        {
            passing += 1;
        }
        mean = mean.max(t.mean);
        norm = norm.max(t.norm);
        orth = orth.max(t.orthogonality);
        second = second.max(t.second_identity);
        anti = anti.max(t.antisymmetry);
    }
    rows.push(CheckRow::at_most("|int psi|", mean, 1e-12));
    rows.push(CheckRow::at_most("|int psi^2 - 1|", norm, 1e-10));
    rows.push(CheckRow::at_most("f . grad psi (relative)", orth, 1e-12));
    rows.push(CheckRow::at_most(
        "d_c Omega~^abc - Omega^ab (relative)",
        second,
        1e-10,
    ));
    rows.push(CheckRow::at_most("Omega + Omega^T", anti, 0.0));

    // supports are disjoint: no grid point lies in two tubes
    let mut overlap = 0usize;
    for idx in 0..grid.len() {
        let x = grid.point(idx);
        let hits = (0..family.len())
            .filter(|&s| family.in_support(s, x))
            .count();
        overlap = overlap.max(hits);
    }
    rows.push(CheckRow::at_most(
        "tubes covering one grid point",
        overlap as f64,
        1.0,
    ));

    // spectral potentials of one tube that the grid resolves
    let sp = Spectral::new(grid);
    let fat = TubeFamily {
        layout: LineLayout {
            lines: vec![family.layout.lines[0]],
            seed: 0,
        },
        profile: super::tube::RadialProfile::new(cfg.resolved_r0, spec)?,
    };
    let mut sampled = fat.sample(0, &sp)?;
    sampled.build_potentials(&sp)?;
    let pot = sampled.report(&sp)?;
    rows.push(CheckRow::at_most(
        "grid: div Omega - psi f",
        pot.first_identity,
        1e-10,
    ));
    rows.push(CheckRow::at_most(
        "grid: div Omega~ - Omega",
        pot.second_identity,
        1e-10,
    ));

    // partition of unity on labels transported by a smooth flow
    let flow = cellular_flow(grid, cfg.flow_amplitude);
    let samples = cfg.transport_steps + 1;
    let frame = advect_frame(
        &sp,
        std::slice::from_ref(&flow),
        0.0,
        cfg.transport_dt,
        samples,
        0,
        FrameConfig { b0: f64::INFINITY },
    )?;
    let last = samples - 1;
    let mut labels = PeriodicField::zeros(grid, Rank::Vector);
    for idx in 0..grid.len() {
        let l = frame.label(last, idx);
        for c in 0..3 {
            labels.comp_mut(c)[idx] = l[c];
        }
    }
    let at_start =
        partition.identity_defect(&PeriodicField::from_fn(grid, Rank::Vector, |x, c| x[c]))?;
    let after = partition.identity_defect(&labels)?;
    rows.push(CheckRow::at_most("sum chi^2 - 1 at t0", at_start, 1e-12));
    rows.push(CheckRow::at_most(
        "sum chi^2 - 1 after transport",
        after,
        1e-6,
    ));
    rows.push(CheckRow::at_least(
        "transported displacement sup",
        frame.displacement[last].sup_norm(),
        0.0,
    ));

    let all_pass = rows.iter().all(|r| r.pass) && passing == family.len();
    Ok(MikadoCheckReport {
        config: cfg.clone(),
        closest_labels: (
            family.layout.lines[closest.a].label(),
            family.layout.lines[closest.b].label(),
        ),
        closest_pair: closest,
        tubes: family.len(),
        tubes_passing: passing,
        pi: partition.pi,
        rows,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> MikadoCheckConfig {
        MikadoCheckConfig {
            points_per_tube: 8,
            transport_steps: 10,
            transport_dt: 0.004,
            ..Default::default()
        }
    }

    #[test]
    fn default_radius_passes_everything() {
        let r = mikado_check(&quick()).unwrap();
        assert!(r.all_pass, "{}", r.table());
        assert_eq!(r.tubes_passing, 48);
        assert!(r.table().lines().count() > 10);
    }

    #[test]
    fn oversized_radius_names_the_closest_pair() {
        let err = mikado_check(&MikadoCheckConfig {
            r0: 0.02,
            ..quick()
        })
        .unwrap_err();
        match err {
            LabError::InfeasibleTubes { a, b, .. } => assert!(a.contains("f=") && b.contains("f=")),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn odd_partition_is_rejected() {
        assert!(matches!(
            mikado_check(&MikadoCheckConfig {
                pi: Some(7),
                ..quick()
            }),
            Err(LabError::BadPartition(_))
        ));
    }
}
