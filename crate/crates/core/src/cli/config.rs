use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{Grid, PeriodicField};
use crate::flux::{lacunary, random_solenoidal, rough_solenoidal, shear, FluxConfig};
use crate::mikado::{BuildStepConfig, MikadoCheckConfig, SteadyMikado};
use crate::params::IterationConfig;

pub const CONFIG_VERSION: u32 = 1;

/// One JSON document configuring every command; absent sections take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub version: u32,
    pub seed: u64,
    pub iterate: IterateSection,
    pub build_step: BuildStepSection,
    pub flux: FluxSection,
    pub mikado_check: MikadoCheckConfig,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            iterate: IterateSection::default(),
            build_step: BuildStepSection::default(),
            flux: FluxSection::default(),
            mikado_check: MikadoCheckConfig::default(),
        }
    }
}

impl LabConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            LabError::Json(e) => LabError::Config(format!("{}: {e}", path.display())),
            e => e,
        })
    }

    /// The `version` key is required; everything else defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(CONFIG_VERSION) => {}
            Some(v) => {
                return Err(LabError::Config(format!(
                    "config version {v}, this build reads version {CONFIG_VERSION}"
                )))
            }
            None => {
                return Err(LabError::Config(
                    "config needs an integer \"version\" key".into(),
                ))
            }
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.iterate.levels.validate()?;
        self.build_step.step.validate()?;
        self.flux.settings.validate()?;
        if self.iterate.dx_points < 2 {
            return Err(LabError::Config("iterate.dx_points must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterateSection {
    pub levels: IterationConfig,
    pub dx_points: usize,
    pub key_rule_tolerance: f64,
    /// Allowed relative distance of B at the deepest grid point from its target.
    pub b_tolerance: f64,
}

impl Default for IterateSection {
    fn default() -> Self {
        Self {
            levels: IterationConfig::default(),
            dx_points: 40,
            key_rule_tolerance: 1e-10,
            b_tolerance: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildStepTolerances {
    pub cancellation: f64,
    pub divergence: f64,
    pub partition: f64,
    pub residual: f64,
    pub moments: f64,
    pub identity: f64,
}

impl Default for BuildStepTolerances {
    fn default() -> Self {
        Self {
            cancellation: 1e-9,
            divergence: 1e-9,
            partition: 1e-10,
            residual: 1e-9,
            moments: 1e-10,
            identity: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildStepSection {
    pub step: BuildStepConfig,
    /// Frequencies for the parametrix remainder sweep; empty skips it.
    pub sweep_lambdas: Vec<u64>,
    pub parametrix_order: usize,
    pub stress_order: usize,
    pub write_fields: bool,
    pub tolerances: BuildStepTolerances,
}

impl Default for BuildStepSection {
    fn default() -> Self {
        Self {
            step: BuildStepConfig::default(),
            sweep_lambdas: Vec::new(),
            parametrix_order: 2,
            stress_order: 2,
            write_fields: true,
            tolerances: BuildStepTolerances::default(),
        }
    }
}

/// Seeded velocity fields for the flux command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SyntheticField {
    Random {
        n: usize,
        band: usize,
    },
    Rough {
        n: usize,
        s: f64,
    },
    Lacunary {
        n: usize,
        s: f64,
    },
    Shear {
        n: usize,
        k: usize,
        amplitude: f64,
    },
    /// One tube (`directions = 1`) or three crossing tubes (`directions = 3`).
    SteadyMikado {
        n: usize,
        r0: f64,
        amplitude: f64,
        directions: usize,
    },
}

impl SyntheticField {
    pub fn build(&self, seed: u64) -> Result<PeriodicField> {
        match *self {
            SyntheticField::Random { n, band } => random_solenoidal(Grid::new(n)?, band, seed),
            SyntheticField::Rough { n, s } => rough_solenoidal(Grid::new(n)?, s, seed),
            SyntheticField::Lacunary { n, s } => Ok(lacunary(Grid::new(n)?, s)),
            SyntheticField::Shear { n, k, amplitude } => Ok(shear(Grid::new(n)?, k, amplitude)),
            SyntheticField::SteadyMikado {
                n,
                r0,
                amplitude,
                directions,
            } => {
                let u = match directions {
                    1 => SteadyMikado::single(r0, amplitude)?,
                    3 => SteadyMikado::three_directions(r0, amplitude)?,
                    d => {
                        return Err(LabError::Config(format!(
                            "steady Mikado takes 1 or 3 directions, got {d}"
                        )))
                    }
                };
                Ok(u.sample(Grid::new(n)?))
            }
        }
    }
}

/// Checks the flux command turns into its exit code, beyond the Hölder chain.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxExpect {
    pub max_abs_flux: Option<f64>,
    /// Smallest fitted order of `|T_eps|` and `|D_eps|_{r/3}` across kernels.
    pub min_order: Option<f64>,
    pub verdict_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxSection {
    /// Used when no field file is given.
    pub synthetic: SyntheticField,
    /// Time sample to read from a multi-sample file.
    pub sample: usize,
    pub settings: FluxConfig,
    /// Reference field for the constant in the density bound.
    pub calibrate_on: Option<SyntheticField>,
    pub expect: FluxExpect,
}

impl Default for FluxSection {
    fn default() -> Self {
        Self {
            synthetic: SyntheticField::Random { n: 32, band: 2 },
            sample: 0,
            settings: FluxConfig::default(),
            calibrate_on: None,
            expect: FluxExpect::default(),
        }
    }
}
