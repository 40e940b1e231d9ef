//! AdaMuon: Muon's orthogonalized momentum, modulated entry-wise by a
//! bias-corrected second moment of the orthogonalized matrix, then rescaled
//! so the update RMS is 0.2.

use crate::densecore::{newton_schulz, Matrix};
use crate::error::Result;
use crate::scalar::Scalar;

use super::{
    accumulate_momentum, apply_decoupled, check_step_inputs, HyperParams, Step, ZERO_GUARD,
};

/// Target RMS of every non-guarded AdaMuon (and RMS-matched Muon) update.
pub const RMS_TARGET: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct AdaMuonState<T> {
    pub(crate) m_buf: Matrix<T>,
    /// Row-major flattening of the second moment, length rows·cols.
    pub(crate) v_buf: Vec<T>,
    pub(crate) step: u64,
}

impl<T: Scalar> AdaMuonState<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            m_buf: Matrix::zeros(rows, cols),
            v_buf: vec![T::zero(); rows * cols],
            step: 0,
        }
    }

    pub fn momentum(&self) -> &Matrix<T> {
        &self.m_buf
    }

    pub fn second_moment(&self) -> &[T] {
        &self.v_buf
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

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
        let t = self.step + 1;

        if m.frobenius_norm() <= T::lit(ZERO_GUARD) {
            let direction = Matrix::zeros(rows, cols);
            let weights = apply_decoupled(w, &direction, lr, hp.lambda)?;
            self.m_buf = m;
            self.step = t;
            return Ok(Step {
                weights,
                direction,
                guarded: true,
            });
        }

        let o = newton_schulz(&m, hp.ns_steps, &hp.ns_coeffs)?;
        let mut v = self.v_buf.clone();
        let v_hat = update_second_moment(&mut v, o.as_slice(), hp.beta2, t);
        let o_hat: Vec<T> = o
            .as_slice()
            .iter()
            .zip(&v_hat)
            .map(|(&oi, &vi)| oi / (vi.sqrt() + hp.eps))
            .collect();
        let o_hat = Matrix::reshape_from(rows, cols, o_hat)?;
        let direction = rms_aligned_direction(&o_hat, hp.eps);
        let weights = apply_decoupled(w, &direction, lr, hp.lambda)?;
        weights.ensure_finite("adamuon update")?;

        self.m_buf = m;
        self.v_buf = v;
        self.step = t;
        Ok(Step {
            weights,
            direction,
            guarded: false,
        })
    }
}

/// Advances the second-moment EMA `v ← β₂·v + (1−β₂)·o²` in place and returns
/// the bias-corrected `v̂ = v / (1 − β₂ᵗ)`.
///
/// The correction is distributed over the two EMA terms, which makes
/// `v̂ = o²` hold bit-exactly at `t = 1`.
pub fn update_second_moment<T: Scalar>(v: &mut [T], o: &[T], beta2: T, t: u64) -> Vec<T> {
    debug_assert_eq!(v.len(), o.len());
    let one_minus = T::one() - beta2;
    let bias = T::one() - beta2_pow(beta2, t);
    let carry = beta2 / bias;
    let gain = one_minus / bias;
    v.iter_mut()
        .zip(o)
        .map(|(vi, &oi)| {
            let sq = oi * oi;
            let prev = *vi;
            *vi = beta2 * prev + one_minus * sq;
            carry * prev + gain * sq
        })
        .collect()
}

fn beta2_pow<T: Scalar>(beta2: T, t: u64) -> T {
    match i32::try_from(t) {
        Ok(k) => beta2.powi(k),
        Err(_) => beta2.powf(T::from_u64(t).expect("step count fits scalar")),
    }
}

/// `0.2 / (RMS(Ô) + ε) · Ô`.
pub fn rms_aligned_direction<T: Scalar>(o_hat: &Matrix<T>, eps: T) -> Matrix<T> {
    let scale = T::lit(RMS_TARGET) / (o_hat.rms() + eps);
    o_hat.scaled(scale)
}

/// The two-stage form: normalize `Ô` to Frobenius norm `√min(n, m)` using
/// `eps_f`, then apply Muon's `γ = 0.2·√max(n, m)`. Equal to
/// [`rms_aligned_direction`] with `eps = eps_f / √(n·m)`.
pub fn frobenius_aligned_direction<T: Scalar>(o_hat: &Matrix<T>, eps_f: T) -> Matrix<T> {
    let (n, m) = o_hat.shape();
    let min_side = T::from_usize(n.min(m)).expect("dimension fits scalar");
    let renorm = min_side.sqrt() / (o_hat.frobenius_norm() + eps_f);
    let normalized = o_hat.scaled(renorm);
    normalized.scaled(super::muon_scale::<T>(n, m))
}

/// Functional form of [`AdaMuonState::step`] returning only the new weights.
pub fn adamuon_step<T: Scalar>(
    w: &Matrix<T>,
    g: &Matrix<T>,
    state: &mut AdaMuonState<T>,
    hp: &HyperParams<T>,
    lr: T,
) -> Result<Matrix<T>> {
    state.step(w, g, hp, lr).map(|s| s.weights)
}
