use serde::{Deserialize, Serialize};

use super::levels::{init_levels, step_levels_with_gain, FrequencyEnergyLevels, IterationConfig};
use crate::error::Result;

/// Per-stage record. Differenced quantities refer to the step from `k` to `k + 1` and are absent at `k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub k: usize,
    pub log_xi: f64,
    pub log_ev: f64,
    pub log_er: f64,
    pub log_xihat: f64,
    pub log_g: f64,
    pub log_n: f64,
    pub key_rule_residual: Option<f64>,
    pub shrinking_margin: Option<f64>,
}

impl StageRecord {
    pub fn levels(&self) -> FrequencyEnergyLevels {
        FrequencyEnergyLevels {
            log_xi: self.log_xi,
            log_ev: self.log_ev,
            log_er: self.log_er,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub config: IterationConfig,
    /// `records[i]` holds stage `k = i + 1`.
    pub records: Vec<StageRecord>,
    /// Relative key-rule residuals, scaled by the magnitude of the differenced terms.
    pub key_rule_relative: Vec<f64>,
}

impl IterationTrace {
    pub fn stage(&self, k: usize) -> &StageRecord {
        &self.records[k - 1]
    }

    pub fn k_max(&self) -> usize {
        self.records.len()
    }

    /// `X_(k+1) - X_(k)` for any per-stage quantity.
    pub fn delta(&self, k: usize, f: impl Fn(&StageRecord) -> f64) -> Option<f64> {
        (k < self.k_max()).then(|| f(self.stage(k + 1)) - f(self.stage(k)))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "k,log_xi,log_ev,log_er,log_xihat,log_g,log_n,key_rule_residual,shrinking_margin\n",
        );
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.records {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{},{}\n",
                r.k,
                r.log_xi,
                r.log_ev,
                r.log_er,
                r.log_xihat,
                r.log_g,
                r.log_n,
                opt(r.key_rule_residual),
                opt(r.shrinking_margin)
            ));
        }
        s
    }
}

/// Runs the iteration with the power-law gain `g_(k) = exp(gamma k log k)`.
pub fn iterate(config: &IterationConfig) -> Result<IterationTrace> {
    iterate_with_gains(config, |k| config.log_gain(k))
}

/// Runs the iteration with an arbitrary gain schedule `log g_(k) > 0`.
pub fn iterate_with_gains(
    config: &IterationConfig,
    log_gain: impl Fn(usize) -> f64,
) -> Result<IterationTrace> {
    let first = init_levels(config)?;
    let mut levels = vec![first, first];
    let mut gains = vec![0.0, 0.0];
    let mut log_ns = vec![0.0, 0.0];
    for k in 2..config.k_max {
        let g = log_gain(k);
        let (next, log_n) = step_levels_with_gain(&levels[k - 1], g, config)?;
        gains[k - 1] = g;
        log_ns[k - 1] = log_n;
        levels.push(next);
        gains.push(0.0);
        log_ns.push(0.0);
    }
    levels.truncate(config.k_max);
    let mut records: Vec<StageRecord> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| StageRecord {
            k: i + 1,
            log_xi: l.log_xi,
            log_ev: l.log_ev,
            log_er: l.log_er,
            log_xihat: l.log_xihat(),
            log_g: gains[i],
            log_n: log_ns[i],
            key_rule_residual: None,
            shrinking_margin: None,
        })
        .collect();
    let mut relative = Vec::with_capacity(records.len());
    for i in 0..records.len().saturating_sub(1) {
        let (a, b) = (records[i], records[i + 1]);
        let d_xihat = b.log_xihat - a.log_xihat;
        let d_er = b.log_er - a.log_er;
        if i >= 1 {
            let log_l = a.log_xihat.ln();
            let rhs = config.key_rule_rhs(log_l);
            let lhs = d_xihat / 3.0 + d_er / 2.0;
            let res = lhs - rhs;
            records[i].key_rule_residual = Some(res);
            let scale = (d_xihat / 3.0).abs() + (d_er / 2.0).abs() + rhs.abs();
            relative.push(res.abs() / scale);
        }
        records[i].shrinking_margin =
            Some(0.5 * (b.log_xihat.ln() - a.log_xihat.ln()) + 0.5 * d_er);
    }
    Ok(IterationTrace {
        config: *config,
        records,
        key_rule_relative: relative,
    })
}

/// Stages `k >= 2` whose shrinking margin exceeds `-log 2`.
pub fn check_shrinking(trace: &IterationTrace) -> Vec<(usize, f64)> {
    trace
        .records
        .iter()
        .filter(|r| r.k >= 2)
        .filter_map(|r| r.shrinking_margin.map(|m| (r.k, m)))
        .filter(|(_, m)| *m > -std::f64::consts::LN_2)
        .collect()
}

/// The six normalized asymptotic ratios at stage `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRatios {
    pub k: usize,
    pub stress_level: f64,
    pub energy_gap: f64,
    pub frequency_jump: f64,
    pub log_frequency: f64,
    pub loglog_frequency: f64,
    pub key_combination: f64,
}

impl AsymptoticRatios {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.stress_level,
            self.energy_gap,
            self.frequency_jump,
            self.log_frequency,
            self.loglog_frequency,
            self.key_combination,
        ]
    }

    pub const NAMES: [&'static str; 6] = [
        "stress_level",
        "energy_gap",
        "frequency_jump",
        "log_frequency",
        "loglog_frequency",
        "key_combination",
    ];
}

pub fn asymptotic_ratios(trace: &IterationTrace, k: usize) -> Option<AsymptoticRatios> {
    if k < 2 || k >= trace.k_max() {
        return None;
    }
    let c = &trace.config;
    let r = trace.stage(k);
    let kf = k as f64;
    let lk = kf.ln();
    let d_xihat = trace.delta(k, |s| s.log_xihat)?;
    Some(AsymptoticRatios {
        k,
        stress_level: -r.log_er / (c.gamma * kf * kf / 2.0 * lk),
        energy_gap: 0.5 * (r.log_ev - r.log_er) / (0.5 * c.gamma * kf * lk),
        frequency_jump: d_xihat / (1.5 * c.gamma * kf * lk),
        log_frequency: r.log_xihat / (1.5 * c.gamma * kf * kf / 2.0 * lk),
        loglog_frequency: r.log_xihat.ln() / (2.0 * lk),
        key_combination: (r.log_xihat / 3.0 + r.log_er / 2.0)
            / (2.0 * (c.a_exp / 3.0 + 1.0 / 6.0) * kf * lk),
    })
}

/// Ratios at every `k` in `ks` that lies inside the trace.
pub fn asymptotics_report(trace: &IterationTrace, ks: &[usize]) -> Vec<AsymptoticRatios> {
    ks.iter()
        .filter_map(|&k| asymptotic_ratios(trace, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xihat_increment_identity() {
        let c = IterationConfig {
            k_max: 40,
            ..Default::default()
        };
        let t = iterate(&c).unwrap();
        for k in 2..c.k_max {
            let a = t.stage(k);
            let want = c.c_hat.ln() + (c.a_exp + 0.5) * a.log_xihat.ln() + 1.5 * c.log_gain(k);
            let got = t.delta(k, |s| s.log_xihat).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs());
            assert!(
                (t.delta(k, |s| s.log_er).unwrap() + c.log_gain(k)).abs() <= 1e-12 * c.log_gain(k)
            );
        }
    }

    #[test]
    fn unit_c_hat_has_no_constant() {
        let c = IterationConfig {
            c_hat: 1.0,
            k_max: 50,
            ..Default::default()
        };
        let t = iterate(&c).unwrap();
        assert!(t.key_rule_relative.iter().all(|r| *r < 1e-13));
    }

    #[test]
    fn perturbing_next_frequency_shifts_residual_by_a_third() {
        let c = IterationConfig {
            k_max: 10,
            ..Default::default()
        };
        let t = iterate(&c).unwrap();
        let k = 4;
        let (a, mut b) = (t.stage(k).levels(), t.stage(k + 1).levels());
        b.log_xi += 1.0;
        let lhs = (b.log_xihat() - a.log_xihat()) / 3.0 + (b.log_er - a.log_er) / 2.0;
        let res = lhs - c.key_rule_rhs(a.log_xihat().ln());
        let base = t.stage(k).key_rule_residual.unwrap();
        assert!((res - base - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn constant_levels_margin() {
        // with no change in levels only the gain term survives
        let c = IterationConfig::default();
        for k in 2..20 {
            let m = -0.5 * c.log_gain(k);
            assert!(m < -std::f64::consts::LN_2);
        }
    }

    #[test]
    fn large_constant_with_weak_gain_violates_shrinking() {
        let c = IterationConfig {
            c_hat: 10f64.exp(),
            gamma: 2.0,
            log_er_init: -1.0,
            log_xibar: 0.51,
            k_max: 30,
            ..Default::default()
        };
        let t = iterate(&c).unwrap();
        assert_eq!(check_shrinking(&t).first().map(|v| v.0), Some(2));
    }

    #[test]
    fn gain_four_absorbs_a_large_constant() {
        // the gain term dominates the first step for every admissible starting frequency
        for log_xibar in [0.51, 1.0, 2.0, 5.0] {
            let c = IterationConfig {
                c_hat: 10f64.exp(),
                log_er_init: -1.0,
                log_xibar,
                k_max: 30,
                ..Default::default()
            };
            let t = iterate(&c).unwrap();
            assert!(check_shrinking(&t).is_empty());
        }
    }

    #[test]
    fn csv_has_one_row_per_stage() {
        let c = IterationConfig {
            k_max: 12,
            ..Default::default()
        };
        let t = iterate(&c).unwrap();
        assert_eq!(t.to_csv().lines().count(), 13);
    }
}
