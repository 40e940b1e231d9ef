use crate::densecore::Matrix;
use crate::error::Result;
use crate::scalar::Scalar;

use super::{apply_decoupled, check_step_inputs, HyperParams, Step};

/// Adam moments for one parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub(crate) m_buf: Matrix<T>,
    pub(crate) v_buf: Matrix<T>,
    pub(crate) step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            m_buf: Matrix::zeros(rows, cols),
            v_buf: Matrix::zeros(rows, cols),
            step: 0,
        }
    }

    pub fn first_moment(&self) -> &Matrix<T> {
        &self.m_buf
    }

    pub fn second_moment(&self) -> &Matrix<T> {
        &self.v_buf
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// AdamW with decoupled decay. Uses `hp.adam_beta1`, `hp.beta2`, `hp.eps`.
    pub fn step(
        &mut self,
        w: &Matrix<T>,
        g: &Matrix<T>,
        hp: &HyperParams<T>,
        lr: T,
    ) -> Result<Step<T>> {
        check_step_inputs(w, g, self.m_buf.shape(), lr)?;
        let (b1, b2) = (hp.adam_beta1, hp.beta2);
        let t = self.step + 1;
        let k = i32::try_from(t).unwrap_or(i32::MAX);
        let bc1 = T::one() - b1.powi(k);
        let bc2 = T::one() - b2.powi(k);

        let m = self
            .m_buf
            .zip_map(g, |m, gi| b1 * m + (T::one() - b1) * gi)?;
        let v = self
            .v_buf
            .zip_map(g, |v, gi| b2 * v + (T::one() - b2) * gi * gi)?;
        let direction = m.zip_map(&v, |mi, vi| (mi / bc1) / ((vi / bc2).sqrt() + hp.eps))?;
        let weights = apply_decoupled(w, &direction, lr, hp.lambda)?;
        weights.ensure_finite("adamw update")?;

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

pub fn adamw_step<T: Scalar>(
    w: &Matrix<T>,
    g: &Matrix<T>,
    state: &mut AdamState<T>,
    hp: &HyperParams<T>,
    lr: T,
) -> Result<Matrix<T>> {
    state.step(w, g, hp, lr).map(|s| s.weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::OptimizerKind;

    type M = Matrix<f64>;

    #[test]
    fn first_step_is_sign_of_gradient() {
        let g = M::from_rows(&[[1e-3, -2.0, 50.0], [-1e-3, 0.5, -7.25]]);
        let w = M::zeros(2, 3);
        let hp = HyperParams::for_optimizer(OptimizerKind::AdamW);
        let mut st = AdamState::new(2, 3);
        let lr = 0.05;
        let w1 = adamw_step(&w, &g, &mut st, &hp, lr).unwrap();
        // m̂ = g and v̂ = g² up to rounding, so the step is −lr·g/(|g| + ε)
        for (d, gi) in w1.as_slice().iter().zip(g.as_slice()) {
            let want = -lr * gi.signum();
            let rel = ((d - want) / want).abs();
            let closed_form = hp.eps / (gi.abs() + hp.eps);
            assert!((rel - closed_form).abs() < 1e-12, "{d} vs {want}");
            if gi.abs() >= 1e-2 {
                assert!(rel < 1e-6);
            }
        }
    }

    #[test]
    fn decay_only() {
        let w = M::from_rows(&[[2.0, -4.0]]);
        let hp = HyperParams {
            lambda: 0.1,
            ..HyperParams::for_optimizer(OptimizerKind::AdamW)
        };
        let mut st = AdamState::new(1, 2);
        let w1 = adamw_step(&w, &M::zeros(1, 2), &mut st, &hp, 0.01).unwrap();
        assert_eq!(w1, w.map(|x| x * (1.0 - 0.001)));
    }

    #[test]
    fn two_step_scalar_hand_trace() {
        // β1 = 0.9, β2 = 0.999, ε = 1e-8, lr = 0.1, λ = 0, w0 = 1
        // g1 = 2:  m = 0.2, v = 0.004, m̂ = 2, v̂ = 4      → d1 = 2/(2+ε)
        // g2 = −1: m = 0.18 − 0.1 = 0.08, v = 0.003996 + 0.001 = 0.004996
        //          m̂ = 0.08/0.19, v̂ = 0.004996/0.001999    → d2 = m̂/(√v̂+ε)
        let hp = HyperParams::for_optimizer(OptimizerKind::AdamW);
        let mut st = AdamState::new(1, 1);
        let lr = 0.1;
        let eps = 1e-8;
        let w0 = M::from_rows(&[[1.0]]);
        let w1 = adamw_step(&w0, &M::from_rows(&[[2.0]]), &mut st, &hp, lr).unwrap();
        let d1 = 2.0 / (2.0 + eps);
        assert!((w1[(0, 0)] - (1.0 - lr * d1)).abs() < 1e-12);
        let w2 = adamw_step(&w1, &M::from_rows(&[[-1.0]]), &mut st, &hp, lr).unwrap();
        let m_hat = 0.08 / 0.19;
        let v_hat: f64 = 0.004996 / 0.001999;
        let d2 = m_hat / (v_hat.sqrt() + eps);
        assert!((w2[(0, 0)] - (1.0 - lr * d1 - lr * d2)).abs() < 1e-12);
    }
}
