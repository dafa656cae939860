//! One localized convex-integration step: synthetic input, mollification, transport, amplitudes,
//! waves, and the decomposition of the new stress.

use serde::{Deserialize, Serialize};

use super::amplitudes::{cancellation_defect, choose_pressure, energy_floor, solve_amplitudes};
use super::directions::DirectionSet;
use super::frame::{advect_frame, cellular_flow, FrameConfig, TimeCutoff, TransportedFrame};
use super::lines::{place_lines, DEFAULT_LAYOUT, DEFAULT_R0};
use super::partition::Partition;
use super::tube::{ProfileSpec, TubeFamily};
use super::waves::{correction_sup, fast_samples, SlowJet, SparsePotential, WaveBuilder, WaveId};
use crate::error::{LabError, Result};
use crate::fields::{
    c2, euler_reynolds_residual, EulerReynoldsState, Grid, KernelId, PeriodicField, Rank, Spectral,
};

/// `eps_v = c_v N^{-1/2} Xi^{-1}`.
pub fn mollification_scale(big_n: f64, xi: f64, c_v: f64) -> f64 {
    c_v / (big_n.sqrt() * xi)
}

/// Synthetic input states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputState {
    /// `v = 0`, `p = -c b`, `R = -c b delta` with a smooth bump `b` of the given radius.
    Smoke { c: f64, radius: f64 },
    /// Steady cellular flow of the given amplitude with the bump stress added and `R` completed.
    Cellular { amplitude: f64, c: f64, radius: f64 },
}

impl Default for InputState {
    fn default() -> Self {
        InputState::Smoke {
            c: 1.0,
            radius: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildStepConfig {
    pub n: usize,
    /// Odd number of time samples; the middle one is `t(I)`.
    pub samples: usize,
    pub dt: f64,
    /// Cutoff half-support; defaults to the distance from `t(I)` to the last sample.
    pub theta: Option<f64>,
    pub xi: f64,
    pub big_n: f64,
    pub c_v: f64,
    pub b_lambda: f64,
    /// Overrides `ceil(B_lambda N Xi)`.
    pub lambda: Option<u64>,
    /// Overrides the smallest admissible `Pi`.
    pub pi: Option<usize>,
    pub r0: f64,
    pub profile_exponent: u32,
    pub layout_seed: u64,
    pub layout_rounds: usize,
    pub kernel: KernelId,
    pub b0: f64,
    pub e_v: f64,
    pub e_r: f64,
    pub log_xihat: f64,
    pub input: InputState,
    /// Frequencies for the two-scale correction sweep.
    pub correction_lambdas: Vec<u64>,
    /// Also transport with `dt / 2` and report the label drift.
    pub drift_check: bool,
}

impl Default for BuildStepConfig {
    fn default() -> Self {
        Self {
            n: 32,
            samples: 5,
            dt: 0.01,
            theta: None,
            xi: 2.0,
            big_n: 2.0,
            c_v: 0.5,
            b_lambda: 2.0,
            lambda: None,
            pi: None,
            r0: DEFAULT_R0,
            profile_exponent: ProfileSpec::default().exponent,
            layout_seed: DEFAULT_LAYOUT.0,
            layout_rounds: DEFAULT_LAYOUT.1,
            kernel: KernelId::default(),
            b0: FrameConfig::default().b0,
            e_v: 1.0,
            e_r: 1.0,
            log_xihat: 2.0,
            input: InputState::default(),
            correction_lambdas: vec![8, 16, 32, 64],
            drift_check: true,
        }
    }
}

impl BuildStepConfig {
    pub fn lambda(&self) -> u64 {
        self.lambda
            .unwrap_or_else(|| (self.b_lambda * self.big_n * self.xi - 1e-9).ceil() as u64)
    }

    pub fn partition(&self) -> Result<Partition> {
        match self.pi {
            Some(pi) => Partition::new(pi, self.xi),
            None => Partition::for_frequency(self.xi),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 3 || self.samples % 2 == 0 {
            return Err(LabError::Config(format!(
                "samples = {} must be odd and >= 3",
                self.samples
            )));
        }
        if !(self.dt > 0.0) || !(self.xi > 0.0) || !(self.big_n >= 1.0) || !(self.c_v > 0.0) {
            return Err(LabError::Config(
                "dt, xi, c_v must be positive and N >= 1".into(),
            ));
        }
        if self.theta.is_some_and(|t| !(t > 0.0)) {
            return Err(LabError::Config("theta must be positive".into()));
        }
        Ok(())
    }

    pub fn center(&self) -> usize {
        self.samples / 2
    }

    pub fn cutoff(&self) -> TimeCutoff {
        let t0 = self.dt * self.center() as f64;
        TimeCutoff {
            t0,
            theta: self.theta.unwrap_or(t0),
        }
    }
}

/// Emitted source `u omega(lambda Gamma)` for the nonstationary-phase solver.
#[derive(Debug, Clone)]
pub struct OscillatorySource {
    pub wave: WaveId,
    pub sample: usize,
    pub kind: SourceKind,
    pub amplitude: PeriodicField,
    /// `v_J v_J` for the high-frequency kind, whose divergence is the amplitude.
    pub potential: Option<PeriodicField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// `u_H (psi_J^2 - 1)` with `u_H = div(v_J v_J)`.
    HighFrequency,
    /// `u_T psi_J` with `u_T = D_t v_J + v_J . grad v_eps`.
    Transport,
}

/// The four stress pieces at every time sample.
#[derive(Debug, Clone)]
pub struct ErrorPieces {
    pub r_m: Vec<PeriodicField>,
    pub r_s: Vec<PeriodicField>,
    pub r_t: Vec<PeriodicField>,
    pub r_h: Vec<PeriodicField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceNorms {
    pub r_m: Vec<f64>,
    pub r_s: Vec<f64>,
    pub r_t: Vec<f64>,
    pub r_h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollificationRequirement {
    pub eps_v: f64,
    /// `|v - v_eps|_0 max_J |v_J|_0 |psi|_0`.
    pub lhs: f64,
    /// `(log xihat)^{1/2} e_v^{1/2} e_R^{1/2} / (500 N)`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSweep {
    pub lambdas: Vec<u64>,
    /// Two-scale `sup |dV_J| / sup |V~_J|` per frequency.
    pub ratios: Vec<f64>,
    pub slope: f64,
    pub slow_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildStepReport {
    pub n: usize,
    pub lambda: u64,
    pub pi: usize,
    pub members: usize,
    pub waves: usize,
    pub eps_v: f64,
    pub m0: f64,
    pub cutoff: TimeCutoff,
    pub r0: f64,
    pub layout_separation: f64,
    pub det_range: (f64, f64),
    pub label_drift: Option<f64>,
    pub partition_defect: f64,
    /// `|sum_J v_J v_J + P delta + R_eps| / (|R_eps| + m0)` at `t(I)`.
    pub cancellation_residual: f64,
    /// `sup |div V| / sup |V|` over samples.
    pub divergence: f64,
    pub max_overlap: usize,
    pub orthogonality: f64,
    pub tube_hits: usize,
    pub aliasing_margin: f64,
    pub residual_input: f64,
    pub residual_output: f64,
    pub pieces: PieceNorms,
    pub requirement: MollificationRequirement,
    pub correction: CorrectionSweep,
    pub sup_v: f64,
    pub sup_main: f64,
    pub sources: usize,
}

pub struct BuildStepOutput {
    pub input: EulerReynoldsState,
    pub output: EulerReynoldsState,
    pub pieces: ErrorPieces,
    pub sources: Vec<OscillatorySource>,
    pub frame: TransportedFrame,
    /// Per-wave `lambda^-2 T_J` at the center sample.
    pub potentials: Vec<SparsePotential>,
    pub report: BuildStepReport,
}

fn bump_field(grid: Grid, radius: f64) -> PeriodicField {
    PeriodicField::from_fn(grid, Rank::Scalar, |x, _| {
        let r2: f64 = x.iter().map(|v| (v - 0.5).powi(2)).sum();
        let s = r2 / (radius * radius);
        if s < 1.0 {
            (-1.0 / (1.0 - s)).exp() * std::f64::consts::E
        } else {
            0.0
        }
    })
}

/// Completes `(v, R_guess)` to an exact Euler-Reynolds state with `p` from the pressure equation.
pub fn complete_state(
    sp: &Spectral,
    t0: f64,
    dt: f64,
    v: Vec<PeriodicField>,
    r_guess: Vec<PeriodicField>,
) -> Result<EulerReynoldsState> {
    let samples = v.len();
    let mut p = Vec::with_capacity(samples);
    let mut r = Vec::with_capacity(samples);
    for i in 0..samples {
        let pi = sp.pressure_solve(&v[i], Some(&r_guess[i]))?;
        let mut src = time_derivative(&v, i, dt)?;
        src.add_assign(&sp.divergence(&PeriodicField::outer(&v[i], &v[i])?)?)?;
        src.add_assign(&sp.gradient(&pi)?)?;
        src.axpy(-1.0, &sp.divergence(&r_guess[i])?)?;
        // a divergence up to round-off
        for c in 0..3 {
            let m = src.mean(c);
            src.comp_mut(c).iter_mut().for_each(|v| *v -= m);
        }
        let mut ri = r_guess[i].clone();
        ri.add_assign(&sp.anti_divergence_sym(&src)?)?;
        p.push(pi);
        r.push(ri);
    }
    EulerReynoldsState::new(t0, dt, v, p, r)
}

/// Centered difference in the interior, one-sided at the ends.
fn time_derivative(f: &[PeriodicField], i: usize, dt: f64) -> Result<PeriodicField> {
    let last = f.len() - 1;
    let (a, b) = if i == 0 {
        (1, 0)
    } else if i == last {
        (last, last - 1)
    } else {
        (i + 1, i - 1)
    };
    let mut out = f[a].sub(&f[b])?;
    out.scale(1.0 / (dt * (a - b) as f64));
    Ok(out)
}

pub fn synthetic_input(sp: &Spectral, config: &BuildStepConfig) -> Result<EulerReynoldsState> {
    let grid = sp.grid();
    let samples = config.samples;
    let (v, c, radius) = match config.input {
        InputState::Smoke { c, radius } => (PeriodicField::zeros(grid, Rank::Vector), c, radius),
        InputState::Cellular {
            amplitude,
            c,
            radius,
        } => (cellular_flow(grid, amplitude), c, radius),
    };
    let b = bump_field(grid, radius);
    let mut r = PeriodicField::identity_times(&b)?;
    r.scale(-c);
    if let InputState::Smoke { .. } = config.input {
        let mut p = b;
        p.scale(-c);
        return EulerReynoldsState::new(
            0.0,
            config.dt,
            vec![v; samples],
            vec![p; samples],
            vec![r; samples],
        );
    }
    complete_state(sp, 0.0, config.dt, vec![v; samples], vec![r; samples])
}

fn sup_profile(tubes: &TubeFamily) -> f64 {
    let r0 = tubes.r0();
    (0..=4000)
        .map(|i| {
            tubes
                .profile
                .radial(r0 * (0.5 + 0.5 * i as f64 / 4000.0))
                .psi
                .abs()
        })
        .fold(0.0, f64::max)
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Fits `log y = s log x + c` and returns `s`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    least_squares_slope(&lx, &ly)
}

/// Everything a build step needs at one time sample besides the fields themselves.
struct Slow<'a> {
    sp: &'a Spectral,
    frame: &'a TransportedFrame,
    partition: Partition,
}

impl Slow<'_> {
    /// `s = chi_k(Gamma) e^{1/2} gamma_f` on the grid.
    fn weight(
        &self,
        i: usize,
        k: [usize; 3],
        gamma2: &[[f64; 6]],
        d: usize,
        sqrt_e: f64,
    ) -> PeriodicField {
        let grid = self.sp.grid();
        let mut s = PeriodicField::zeros(grid, Rank::Scalar);
        for idx in 0..grid.len() {
            let chi = self.partition.value(k, self.frame.label(i, idx));
            s.comp_mut(0)[idx] = chi * sqrt_e * gamma2[idx][d].sqrt();
        }
        s
    }

    /// `v_J = s H f`.
    fn amplitude(&self, i: usize, s: &PeriodicField, d: usize) -> PeriodicField {
        let f = DirectionSet.vector(d);
        let grid = self.sp.grid();
        let mut v = PeriodicField::zeros(grid, Rank::Vector);
        for idx in 0..grid.len() {
            let h = self.frame.inv_grad_at(i, idx);
            for l in 0..3 {
                v.comp_mut(l)[idx] = s.comp(0)[idx] * (0..3).map(|b| h[l][b] * f[b]).sum::<f64>();
            }
        }
        v
    }
}

/// Runs one step.
pub fn build_step(config: &BuildStepConfig) -> Result<BuildStepOutput> {
    config.validate()?;
    let grid = Grid::new(config.n)?;
    let sp = Spectral::new(grid);
    let input = synthetic_input(&sp, config)?;
    build_step_from(&sp, config, input)
}

/// Runs one step on a given input state whose sample count and spacing match the config.
pub fn build_step_from(
    sp: &Spectral,
    config: &BuildStepConfig,
    input: EulerReynoldsState,
) -> Result<BuildStepOutput> {
    config.validate()?;
    if input.len() != config.samples {
        return Err(LabError::Config(format!(
            "input has {} samples, config {}",
            input.len(),
            config.samples
        )));
    }
    let grid = sp.grid();
    let samples = config.samples;
    let center = config.center();
    let lambda = config.lambda();
    let partition = config.partition()?;
    let cutoff = config.cutoff();
    let eps_v = mollification_scale(config.big_n, config.xi, config.c_v);
    let layout = if (config.layout_seed, config.layout_rounds) == DEFAULT_LAYOUT {
        super::lines::default_layout().clone()
    } else {
        place_lines(config.layout_seed, config.layout_rounds)
    };
    let layout_separation = layout.closest_pair().distance;
    let tubes = TubeFamily::new(
        layout,
        config.r0,
        ProfileSpec {
            exponent: config.profile_exponent,
        },
    )?;

    let residual_input = euler_reynolds_residual(sp, &input, false)?;
    let mut v_eps = Vec::with_capacity(samples);
    let mut r_eps = Vec::with_capacity(samples);
    for i in 0..samples {
        v_eps.push(sp.mollify(&input.v[i], eps_v, config.kernel)?);
        r_eps.push(sp.mollify(&input.r[i], eps_v, config.kernel)?);
    }
    let steady = v_eps.windows(2).all(|w| w[0] == w[1]);
    let velocity: &[PeriodicField] = if steady { &v_eps[..1] } else { &v_eps };
    let frame_config = FrameConfig { b0: config.b0 };
    let frame = advect_frame(
        sp,
        velocity,
        input.t0,
        config.dt,
        samples,
        center,
        frame_config,
    )?;
    let label_drift = if config.drift_check {
        let fine_velocity: Vec<PeriodicField> = if steady {
            velocity.to_vec()
        } else {
            // linear interpolation in time onto the refined samples
            (0..2 * samples - 1)
                .map(|j| {
                    if j % 2 == 0 {
                        Ok(v_eps[j / 2].clone())
                    } else {
                        let mut m = v_eps[j / 2].add(&v_eps[j / 2 + 1])?;
                        m.scale(0.5);
                        Ok(m)
                    }
                })
                .collect::<Result<_>>()?
        };
        let fine = advect_frame(
            sp,
            &fine_velocity,
            input.t0,
            0.5 * config.dt,
            2 * samples - 1,
            2 * center,
            frame_config,
        )?;
        let mut worst = 0.0_f64;
        for i in 0..samples {
            for c in 0..3 {
                for (a, b) in frame.displacement[i]
                    .comp(c)
                    .iter()
                    .zip(fine.displacement[2 * i].comp(c))
                {
                    let d = a - b;
                    worst = worst.max((d - d.round()).abs());
                }
            }
        }
        Some(worst)
    } else {
        None
    };
    let mut partition_defect = 0.0_f64;
    for i in 0..samples {
        let labels =
            frame.displacement[i].add(&PeriodicField::from_fn(grid, Rank::Vector, |x, c| x[c]))?;
        partition_defect = partition_defect.max(partition.identity_defect(&labels)?);
    }

    let builder = WaveBuilder {
        tubes: &tubes,
        partition,
        lambda,
    };
    let aliasing_margin = builder.check_aliasing(&frame)?;
    let m0 = energy_floor(&r_eps);
    let mut pressure = Vec::with_capacity(samples);
    let mut gamma2 = Vec::with_capacity(samples);
    let mut cancellation_residual = 0.0;
    for i in 0..samples {
        let p_tilde = choose_pressure(&r_eps[i], &frame.grad[i], m0)?;
        let g2 = solve_amplitudes(&r_eps[i], &p_tilde, &frame.grad[i])?;
        if i == center {
            let scale = r_eps[i].sup_norm() + m0;
            let defect = cancellation_defect(&g2, &r_eps[i], &p_tilde, &frame.inv_grad[i]);
            cancellation_residual = if scale > 0.0 { defect / scale } else { defect };
        }
        let mut p = p_tilde;
        p.scale(cutoff.energy(frame.time(i)));
        pressure.push(p);
        gamma2.push(g2);
    }

    let mut waves = Vec::with_capacity(samples);
    let (mut divergence, mut max_overlap, mut orthogonality, mut hits) = (0.0_f64, 0, 0.0_f64, 0);
    let (mut sup_v, mut sup_main) = (0.0_f64, 0.0_f64);
    for i in 0..samples {
        let w = builder.assemble(
            sp,
            &frame,
            i,
            &gamma2[i],
            cutoff.sqrt_energy(frame.time(i)),
            None,
        )?;
        let vs = w.v.sup_norm();
        if vs > 0.0 {
            divergence = divergence.max(sp.divergence(&w.v)?.sup_norm() / vs);
        }
        sup_v = sup_v.max(vs);
        sup_main = sup_main.max(w.main.sup_norm());
        max_overlap = max_overlap.max(w.max_overlap);
        orthogonality = orthogonality.max(w.orthogonality);
        hits += w.hits;
        waves.push(w);
    }

    // new state and stress pieces
    let mut v1 = Vec::with_capacity(samples);
    let mut p1 = Vec::with_capacity(samples);
    let mut r1 = Vec::with_capacity(samples);
    let mut pieces = ErrorPieces {
        r_m: vec![],
        r_s: vec![],
        r_t: vec![],
        r_h: vec![],
    };
    let vs: Vec<PeriodicField> = waves.iter().map(|w| w.v.clone()).collect();
    for i in 0..samples {
        let v = &vs[i];
        let dv = input.v[i].sub(&v_eps[i])?;
        let mut r_m = PeriodicField::sym_outer(&dv, v)?;
        r_m.add_assign(&input.r[i])?;
        r_m.axpy(-1.0, &r_eps[i])?;
        let mut r_s = PeriodicField::outer(v, v)?.with_rank(Rank::Sym2);
        r_s.axpy(-1.0, &waves[i].main_square)?;
        let mut r_h = waves[i].main_square.clone();
        r_h.add_assign(&PeriodicField::identity_times(&pressure[i])?)?;
        r_h.add_assign(&r_eps[i])?;
        let mut src = time_derivative(&vs, i, config.dt)?;
        src.add_assign(&sp.divergence(&PeriodicField::sym_outer(&v_eps[i], v)?)?)?;
        let r_t = sp.anti_divergence_sym(&src)?;
        let mut r = r_m.add(&r_s)?;
        r.add_assign(&r_t)?;
        r.add_assign(&r_h)?;
        v1.push(input.v[i].add(v)?);
        p1.push(input.p[i].add(&pressure[i])?);
        r1.push(r);
        pieces.r_m.push(r_m);
        pieces.r_s.push(r_s);
        pieces.r_t.push(r_t);
        pieces.r_h.push(r_h);
    }
    drop(vs);
    let output = EulerReynoldsState::new(input.t0, input.dt, v1, p1, r1)?;
    let residual_output = euler_reynolds_residual(sp, &output, false)?;
    let norms = |f: &[PeriodicField]| f.iter().map(|x| x.sup_norm()).collect::<Vec<_>>();
    let piece_norms = PieceNorms {
        r_m: norms(&pieces.r_m),
        r_s: norms(&pieces.r_s),
        r_t: norms(&pieces.r_t),
        r_h: norms(&pieces.r_h),
    };

    // mollification requirement and sources on the member covering the bump center
    let slow = Slow {
        sp,
        frame: &frame,
        partition,
    };
    let k = [partition.pi / 2; 3];
    let member = partition.member_index(k);
    let mut max_amp = 0.0_f64;
    let mut sources = Vec::new();
    let potentials = builder.potentials(
        &frame,
        center,
        &gamma2[center],
        cutoff.sqrt_energy(frame.time(center)),
    );
    let mut jets = Vec::new();
    let mut main_sup = 0.0_f64;
    for d in 0..6 {
        let wave = WaveId {
            member,
            direction: d,
        };
        let weights: Vec<PeriodicField> = (0..samples)
            .map(|i| slow.weight(i, k, &gamma2[i], d, cutoff.sqrt_energy(frame.time(i))))
            .collect();
        let amps: Vec<PeriodicField> = (0..samples)
            .map(|i| slow.amplitude(i, &weights[i], d))
            .collect();
        for a in &amps {
            max_amp = max_amp.max(a.magnitude().into_iter().fold(0.0, f64::max));
        }
        let vj = &amps[center];
        if vj.sup_norm() == 0.0 {
            continue;
        }
        let vjvj = PeriodicField::outer(vj, vj)?.with_rank(Rank::Sym2);
        let u_h = sp.divergence(&vjvj)?;
        sources.push(OscillatorySource {
            wave,
            sample: center,
            kind: SourceKind::HighFrequency,
            amplitude: u_h,
            potential: Some(vjvj),
        });
        let mut u_t = time_derivative(&amps, center, config.dt)?;
        let grad_vj = sp.gradient(vj)?;
        let grad_ve = sp.gradient(&v_eps[center])?;
        for idx in 0..grid.len() {
            for l in 0..3 {
                let mut acc = 0.0;
                for j in 0..3 {
                    acc += v_eps[center].comp(j)[idx] * grad_vj.comp(c2(j, l))[idx];
                    acc += vj.comp(j)[idx] * grad_ve.comp(c2(j, l))[idx];
                }
                u_t.comp_mut(l)[idx] += acc;
            }
        }
        sources.push(OscillatorySource {
            wave,
            sample: center,
            kind: SourceKind::Transport,
            amplitude: u_t,
            potential: None,
        });

        let (dir_jets, dir_main) = slow_jets(sp, &frame, center, &weights[center], d)?;
        main_sup = main_sup.max(dir_main);
        jets.push((d, dir_jets));
    }
    let psi_sup = sup_profile(&tubes);
    let mut dv_sup = 0.0_f64;
    for i in 0..samples {
        dv_sup = dv_sup.max(input.v[i].sub(&v_eps[i])?.sup_norm());
    }
    let lhs = dv_sup * max_amp * psi_sup;
    let rhs = config.log_xihat.max(0.0).sqrt() * (config.e_v * config.e_r).sqrt()
        / (500.0 * config.big_n);
    let requirement = MollificationRequirement {
        eps_v,
        lhs,
        rhs,
        holds: lhs <= rhs,
    };

    let lambdas: Vec<f64> = config
        .correction_lambdas
        .iter()
        .map(|&l| l as f64)
        .collect();
    let mut dv = vec![0.0_f64; lambdas.len()];
    let mut slow_points = 0;
    for (d, list) in &jets {
        let class = super::lines::class_index(k.map(|v| (v % 2) as u8));
        let fast = fast_samples(&tubes, 8 * d + class, 16, 12);
        slow_points += list.len();
        for (o, v) in dv.iter_mut().zip(correction_sup(list, &fast, &lambdas)) {
            *o = o.max(v);
        }
    }
    let main_two_scale = main_sup * psi_sup;
    let ratios: Vec<f64> = dv.iter().map(|v| v / main_two_scale).collect();
    let slope = if lambdas.len() >= 2 && ratios.iter().all(|r| *r > 0.0) {
        log_log_slope(&lambdas, &ratios)
    } else {
        f64::NAN
    };

    let report = BuildStepReport {
        n: grid.n(),
        lambda,
        pi: partition.pi,
        members: partition.members(),
        waves: 6 * partition.members(),
        eps_v,
        m0,
        cutoff,
        r0: tubes.r0(),
        layout_separation,
        det_range: frame.det_range,
        label_drift,
        partition_defect,
        cancellation_residual,
        divergence,
        max_overlap,
        orthogonality,
        tube_hits: hits,
        aliasing_margin,
        residual_input,
        residual_output,
        pieces: piece_norms,
        requirement,
        correction: CorrectionSweep {
            lambdas: config.correction_lambdas.clone(),
            ratios,
            slope,
            slow_points,
        },
        sup_v,
        sup_main,
        sources: sources.len(),
    };
    Ok(BuildStepOutput {
        input,
        output,
        pieces,
        sources,
        frame,
        potentials,
        report,
    })
}

/// Slow jets of wave `(k, d)` at sample `i` on a subsampled support, and `sup |s H f|` there.
fn slow_jets(
    sp: &Spectral,
    frame: &TransportedFrame,
    i: usize,
    weight: &PeriodicField,
    d: usize,
) -> Result<(Vec<super::waves::CorrectionCoefficients>, f64)> {
    let grid = sp.grid();
    let f = DirectionSet.vector(d);
    let ds = sp.gradient(weight)?;
    let dds = sp.gradient(&ds)?;
    let h = &frame.inv_grad[i];
    let dh: Vec<PeriodicField> = (0..3).map(|m| sp.derivative(h, m)).collect();
    let ddh: Vec<Vec<PeriodicField>> = (0..3)
        .map(|m| (0..3).map(|n| sp.derivative(&dh[m], n)).collect())
        .collect();
    let dg: Vec<PeriodicField> = (0..3).map(|m| sp.derivative(&frame.grad[i], m)).collect();
    let support: Vec<usize> = (0..grid.len())
        .filter(|&idx| weight.comp(0)[idx] != 0.0)
        .collect();
    let stride = (support.len() / 1500).max(1);
    let mut jets = Vec::new();
    let mut main = 0.0_f64;
    for &idx in support.iter().step_by(stride) {
        let mut jet = SlowJet {
            s: weight.comp(0)[idx],
            ds: [0.0; 3],
            dds: [[0.0; 3]; 3],
            h: frame.inv_grad_at(i, idx),
            dh: [[[0.0; 3]; 3]; 3],
            ddh: [[[[0.0; 3]; 3]; 3]; 3],
            g: frame.grad_at(i, idx),
            dg: [[[0.0; 3]; 3]; 3],
        };
        for m in 0..3 {
            jet.ds[m] = ds.comp(m)[idx];
            for n in 0..3 {
                jet.dds[m][n] = dds.comp(c2(m, n))[idx];
            }
            for l in 0..3 {
                for a in 0..3 {
                    jet.dh[m][l][a] = dh[m].comp(c2(l, a))[idx];
                    jet.dg[m][l][a] = dg[m].comp(c2(l, a))[idx];
                    for n in 0..3 {
                        jet.ddh[m][n][l][a] = ddh[m][n].comp(c2(l, a))[idx];
                    }
                }
            }
        }
        let hf: [f64; 3] = std::array::from_fn(|l| (0..3).map(|b| jet.h[l][b] * f[b]).sum());
        main = main.max(jet.s.abs() * (hf[0] * hf[0] + hf[1] * hf[1] + hf[2] * hf[2]).sqrt());
        jets.push(jet.coefficients());
    }
    Ok((jets, main))
}
