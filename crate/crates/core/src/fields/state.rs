use super::field::{PeriodicField, Rank};
use super::spectral::Spectral;
use crate::error::{LabError, Result};

/// Time samples of an Euler-Reynolds flow `(v, p, R)` at uniform spacing.
#[derive(Debug, Clone)]
pub struct EulerReynoldsState {
    pub t0: f64,
    pub dt: f64,
    pub v: Vec<PeriodicField>,
    pub p: Vec<PeriodicField>,
    pub r: Vec<PeriodicField>,
}

impl EulerReynoldsState {
    pub fn new(
        t0: f64,
        dt: f64,
        v: Vec<PeriodicField>,
        p: Vec<PeriodicField>,
        r: Vec<PeriodicField>,
    ) -> Result<Self> {
        if v.len() != p.len() || v.len() != r.len() {
            return Err(LabError::Config(
                "v, p and R need equal sample counts".into(),
            ));
        }
        for ((v, p), r) in v.iter().zip(&p).zip(&r) {
            v.expect_rank(Rank::Vector)?;
            p.expect_rank(Rank::Scalar)?;
            r.expect_rank(Rank::Sym2)?;
            if v.grid() != p.grid() || v.grid() != r.grid() {
                return Err(LabError::GridMismatch(v.grid().n(), r.grid().n()));
            }
        }
        Ok(Self { t0, dt, v, p, r })
    }

    /// A state frozen in time.
    pub fn steady(
        v: PeriodicField,
        p: PeriodicField,
        r: PeriodicField,
        samples: usize,
        dt: f64,
    ) -> Result<Self> {
        Self::new(
            0.0,
            dt,
            vec![v; samples],
            vec![p; samples],
            vec![r; samples],
        )
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    /// Largest spectral divergence of `v` over all samples.
    pub fn max_divergence(&self, sp: &Spectral) -> Result<f64> {
        let mut worst = 0.0_f64;
        for v in &self.v {
            worst = worst.max(sp.divergence(v)?.sup_norm());
        }
        Ok(worst)
    }
}

/// `d_t v + div(v v) + grad p - div R` at interior sample `i`, with a centered time difference.
pub fn residual_at(
    sp: &Spectral,
    state: &EulerReynoldsState,
    i: usize,
    dealias: bool,
) -> Result<PeriodicField> {
    if state.len() < 3 {
        return Err(LabError::TooFewSamples {
            need: 3,
            got: state.len(),
        });
    }
    if i == 0 || i + 1 >= state.len() {
        return Err(LabError::Config(format!("sample {i} is not interior")));
    }
    let mut out = state.v[i + 1].sub(&state.v[i - 1])?;
    out.scale(1.0 / (2.0 * state.dt));
    let v = if dealias {
        sp.dealias(&state.v[i])
    } else {
        state.v[i].clone()
    };
    let mut vv = PeriodicField::outer(&v, &v)?;
    if dealias {
        vv = sp.dealias(&vv);
    }
    out.add_assign(&sp.divergence(&vv)?)?;
    out.add_assign(&sp.gradient(&state.p[i])?)?;
    out.axpy(-1.0, &sp.divergence(&state.r[i])?)?;
    Ok(out)
}

/// Largest sup-norm of the Euler-Reynolds residual over interior samples.
pub fn euler_reynolds_residual(
    sp: &Spectral,
    state: &EulerReynoldsState,
    dealias: bool,
) -> Result<f64> {
    if state.len() < 3 {
        return Err(LabError::TooFewSamples {
            need: 3,
            got: state.len(),
        });
    }
    let mut worst = 0.0_f64;
    for i in 1..state.len() - 1 {
        worst = worst.max(residual_at(sp, state, i, dealias)?.sup_norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn zero_state_has_zero_residual() {
        let g = Grid::new(8).unwrap();
        let sp = Spectral::new(g);
        let s = EulerReynoldsState::steady(
            PeriodicField::zeros(g, Rank::Vector),
            PeriodicField::zeros(g, Rank::Scalar),
            PeriodicField::zeros(g, Rank::Sym2),
            3,
            0.1,
        )
        .unwrap();
        assert_eq!(euler_reynolds_residual(&sp, &s, false).unwrap(), 0.0);
    }

    #[test]
    fn needs_three_samples() {
        let g = Grid::new(8).unwrap();
        let sp = Spectral::new(g);
        let s = EulerReynoldsState::steady(
            PeriodicField::zeros(g, Rank::Vector),
            PeriodicField::zeros(g, Rank::Scalar),
            PeriodicField::zeros(g, Rank::Sym2),
            2,
            0.1,
        )
        .unwrap();
        assert!(matches!(
            euler_reynolds_residual(&sp, &s, false),
            Err(LabError::TooFewSamples { .. })
        ));
    }
}
