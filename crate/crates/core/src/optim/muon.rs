use crate::densecore::{newton_schulz, Matrix};
use crate::error::Result;
use crate::scalar::Scalar;

use super::{
    accumulate_momentum, apply_decoupled, check_step_inputs, HyperParams, Step, RMS_TARGET,
    ZERO_GUARD,
};

/// Momentum buffer plus step counter. Shared by Muon and SGD-momentum.
#[derive(Clone, Debug, PartialEq)]
pub struct MuonState<T> {
    pub(crate) m_buf: Matrix<T>,
    pub(crate) step: u64,
}

/// SGD-momentum keeps exactly the same state as Muon.
pub type SgdState<T> = MuonState<T>;

/// RMS-matching factor `γ = 0.2·√max(n, m)`.
pub fn muon_scale<T: Scalar>(rows: usize, cols: usize) -> T {
    T::lit(RMS_TARGET)
        * T::from_usize(rows.max(cols))
            .expect("dimension fits scalar")
            .sqrt()
}

impl<T: Scalar> MuonState<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            m_buf: Matrix::zeros(rows, cols),
            step: 0,
        }
    }

    pub fn momentum(&self) -> &Matrix<T> {
        &self.m_buf
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Muon with RMS matching: `W ← W − lr·(γ·NS(M) + λW)`.
    pub fn step(
        &mut self,
        w: &Matrix<T>,
        g: &Matrix<T>,
        hp: &HyperParams<T>,
        lr: T,
    ) -> Result<Step<T>> {
        check_step_inputs(w, g, self.m_buf.shape(), lr)?;
        let (rows, cols) = w.shape();
        let mut m = self.m_buf.clone();
        accumulate_momentum(&mut m, g, hp.beta, hp.momentum_dampening);

        let (direction, guarded) = if m.frobenius_norm() <= T::lit(ZERO_GUARD) {
            (Matrix::zeros(rows, cols), true)
        } else {
            let o = newton_schulz(&m, hp.ns_steps, &hp.ns_coeffs)?;
            (o.scaled(muon_scale(rows, cols)), false)
        };
        let weights = apply_decoupled(w, &direction, lr, hp.lambda)?;
        weights.ensure_finite("muon update")?;
        self.m_buf = m;
        self.step += 1;
        Ok(Step {
            weights,
            direction,
            guarded,
        })
    }

    /// Heavy-ball SGD: `v ← βv + g`, `W ← W − lr·(v + λW)`.
    pub fn step_sgd(
        &mut self,
        w: &Matrix<T>,
        g: &Matrix<T>,
        hp: &HyperParams<T>,
        lr: T,
    ) -> Result<Step<T>> {
        check_step_inputs(w, g, self.m_buf.shape(), lr)?;
        let mut v = self.m_buf.clone();
        accumulate_momentum(&mut v, g, hp.beta, false);
        let weights = apply_decoupled(w, &v, lr, hp.lambda)?;
        weights.ensure_finite("sgd-momentum update")?;
        self.m_buf = v.clone();
        self.step += 1;
        Ok(Step {
            weights,
            direction: v,
            guarded: false,
        })
    }
}

pub fn muon_step<T: Scalar>(
    w: &Matrix<T>,
    g: &Matrix<T>,
    state: &mut MuonState<T>,
    hp: &HyperParams<T>,
    lr: T,
) -> Result<Matrix<T>> {
    state.step(w, g, hp, lr).map(|s| s.weights)
}

pub fn sgdm_step<T: Scalar>(
    w: &Matrix<T>,
    g: &Matrix<T>,
    state: &mut SgdState<T>,
    hp: &HyperParams<T>,
    lr: T,
) -> Result<Matrix<T>> {
    state.step_sgd(w, g, hp, lr).map(|s| s.weights)
}
