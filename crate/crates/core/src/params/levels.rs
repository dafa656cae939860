use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Natural logs of frequency, velocity energy and stress energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEnergyLevels {
    pub log_xi: f64,
    pub log_ev: f64,
    pub log_er: f64,
}

impl FrequencyEnergyLevels {
    pub fn new(log_xi: f64, log_ev: f64, log_er: f64) -> Result<Self> {
        let l = Self {
            log_xi,
            log_ev,
            log_er,
        };
        l.validate()?;
        Ok(l)
    }

    /// `log (Xi (e_v / e_R)^{1/2})`
    pub fn log_xihat(&self) -> f64 {
        self.log_xi + 0.5 * (self.log_ev - self.log_er)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.log_xi.is_finite() && self.log_ev.is_finite() && self.log_er.is_finite()) {
            return Err(LabError::NonFinite("frequency-energy levels"));
        }
        if self.log_ev < self.log_er {
            return Err(LabError::Config(format!(
                "velocity level {} below stress level {}",
                self.log_ev, self.log_er
            )));
        }
        Ok(())
    }
}

/// Inputs of the level iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationConfig {
    pub c_hat: f64,
    pub c_l: f64,
    pub gamma: f64,
    pub a_exp: f64,
    pub log_er_init: f64,
    pub log_xibar: f64,
    pub k_max: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            c_hat: std::f64::consts::E,
            c_l: 1.0,
            gamma: 4.0,
            a_exp: 2.5,
            log_er_init: -20.0,
            log_xibar: 0.0,
            k_max: 10_000,
        }
    }
}

impl IterationConfig {
    /// Settings of the improved scheme with one fewer logarithm power.
    pub fn improved() -> Self {
        Self {
            gamma: 8.0 / 3.0,
            a_exp: 1.5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.c_hat,
            self.c_l,
            self.gamma,
            self.a_exp,
            self.log_er_init,
            self.log_xibar,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(LabError::NonFinite("iteration config"));
        }
        if self.c_hat <= 0.0 || self.c_l <= 0.0 || self.gamma <= 0.0 {
            return Err(LabError::Config(
                "c_hat, c_l and gamma must be positive".into(),
            ));
        }
        if (self.a_exp - 2.5).abs() > 1e-12 && (self.a_exp - 1.5).abs() > 1e-12 {
            return Err(LabError::Config(format!(
                "a_exp must be 5/2 or 3/2, got {}",
                self.a_exp
            )));
        }
        if self.log_er_init >= 0.0 {
            return Err(LabError::Config("log_er_init must be negative".into()));
        }
        if self.k_max < 2 {
            return Err(LabError::Config("k_max must be at least 2".into()));
        }
        Ok(())
    }

    /// `log g_(k) = gamma k log k`
    pub fn log_gain(&self, k: usize) -> f64 {
        let k = k as f64;
        self.gamma * k * k.ln()
    }

    /// Constant of the key evolution rule, `(A/3 + 1/6) log L + (1/3) log c_hat`.
    pub fn key_rule_rhs(&self, log_l: f64) -> f64 {
        (self.a_exp / 3.0 + 1.0 / 6.0) * log_l + self.c_hat.ln() / 3.0
    }
}

pub fn init_levels(config: &IterationConfig) -> Result<FrequencyEnergyLevels> {
    config.validate()?;
    FrequencyEnergyLevels::new(
        config.log_xibar - config.log_er_init / 2.0,
        config.log_er_init,
        config.log_er_init,
    )
}

/// Advances the levels from stage `k` to `k + 1` with gain `log_g`.
pub fn step_levels_with_gain(
    levels: &FrequencyEnergyLevels,
    log_g: f64,
    config: &IterationConfig,
) -> Result<(FrequencyEnergyLevels, f64)> {
    levels.validate()?;
    let l = levels.log_xihat();
    if l <= 1.0 {
        return Err(LabError::LogLogUndefined(l));
    }
    let log_l = l.ln();
    let log_n = config.a_exp * log_l + 0.5 * (levels.log_ev - levels.log_er) + log_g;
    let next = FrequencyEnergyLevels {
        log_xi: config.c_hat.ln() + log_n + levels.log_xi,
        log_ev: log_l + levels.log_er,
        log_er: levels.log_er - log_g,
    };
    if !(next.log_xi.is_finite() && next.log_er.is_finite()) {
        return Err(LabError::NonFinite("stepped levels"));
    }
    Ok((next, log_n))
}

pub fn step_levels(
    levels: &FrequencyEnergyLevels,
    k: usize,
    config: &IterationConfig,
) -> Result<FrequencyEnergyLevels> {
    if k < 2 {
        return Err(LabError::Config("stepping starts at k = 2".into()));
    }
    step_levels_with_gain(levels, config.log_gain(k), config).map(|(l, _)| l)
}
