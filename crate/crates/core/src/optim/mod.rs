//! Optimizer state machines.
//!
//! Each optimizer owns one state value per parameter and exposes a `step`
//! that consumes the current weights and gradient and returns the new
//! weights together with the pre-decay, pre-learning-rate update direction.
//! Weight decay is always decoupled: `W ← W − lr·(direction + λ·W)`.

mod adamuon;
mod adamw;
mod groups;
mod muon;

use std::fmt;
use std::str::FromStr;

pub use adamuon::{
    adamuon_step, frobenius_aligned_direction, rms_aligned_direction, update_second_moment,
    AdaMuonState, RMS_TARGET,
};
pub use adamw::{adamw_step, AdamState};
pub use groups::{assign_param_groups, assign_param_groups_with, ParamGroup, ShapeClass};
pub use muon::{muon_scale, muon_step, sgdm_step, MuonState, SgdState};

use crate::densecore::{Matrix, NsCoefficients};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Momentum norms at or below this skip orthogonalization and apply decay only.
pub const ZERO_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptimizerKind {
    AdaMuon,
    Muon,
    AdamW,
    SgdMomentum,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [
        OptimizerKind::AdaMuon,
        OptimizerKind::Muon,
        OptimizerKind::AdamW,
        OptimizerKind::SgdMomentum,
    ];

    /// Whether this optimizer only makes sense on true 2-D parameters.
    pub fn is_matrix_only(self) -> bool {
        matches!(self, OptimizerKind::AdaMuon | OptimizerKind::Muon)
    }

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::AdaMuon => "adamuon",
            OptimizerKind::Muon => "muon",
            OptimizerKind::AdamW => "adamw",
            OptimizerKind::SgdMomentum => "sgdm",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adamuon" => Ok(OptimizerKind::AdaMuon),
            "muon" => Ok(OptimizerKind::Muon),
            "adamw" => Ok(OptimizerKind::AdamW),
            "sgdm" | "sgd" | "sgd_momentum" | "sgdmomentum" => Ok(OptimizerKind::SgdMomentum),
            other => Err(Error::InvalidHyperParams(format!(
                "unknown optimizer `{other}`"
            ))),
        }
    }
}

/// Every tunable of the four optimizers.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams<T> {
    /// Peak learning rate η.
    pub eta: T,
    /// Decoupled weight decay λ.
    pub lambda: T,
    /// First-moment coefficient β for AdaMuon, Muon and SGD-momentum.
    pub beta: T,
    /// Second-moment decay β₂ (AdaMuon and AdamW).
    pub beta2: T,
    pub eps: T,
    pub ns_steps: usize,
    pub ns_coeffs: NsCoefficients,
    /// `true`: `M ← βM + (1−β)G`; `false`: `M ← βM + G`.
    pub momentum_dampening: bool,
    /// β₁ of AdamW.
    pub adam_beta1: T,
}

impl<T: Scalar> HyperParams<T> {
    /// Defaults with the momentum form each optimizer is usually written
    /// with: dampened for AdaMuon, plain for the others.
    pub fn for_optimizer(kind: OptimizerKind) -> Self {
        Self {
            eta: T::lit(1e-3),
            lambda: T::zero(),
            beta: T::lit(0.95),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            ns_steps: 5,
            ns_coeffs: NsCoefficients::quintic(),
            momentum_dampening: kind == OptimizerKind::AdaMuon,
            adam_beta1: T::lit(0.9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidHyperParams(msg));
        let finite = [
            ("eta", self.eta),
            ("lambda", self.lambda),
            ("beta", self.beta),
            ("beta2", self.beta2),
            ("eps", self.eps),
            ("adam_beta1", self.adam_beta1),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return bad(format!("{name} is not finite"));
            }
        }
        if self.eta <= T::zero() {
            return bad(format!("eta must be > 0, got {}", self.eta));
        }
        if self.lambda < T::zero() {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if self.eps <= T::zero() {
            return bad(format!("eps must be > 0, got {}", self.eps));
        }
        for (name, v) in [
            ("beta", self.beta),
            ("beta2", self.beta2),
            ("adam_beta1", self.adam_beta1),
        ] {
            if v < T::zero() || v >= T::one() {
                return bad(format!("{name} must be in [0, 1), got {v}"));
            }
        }
        if self.ns_steps == 0 {
            return bad("ns_steps must be positive".into());
        }
        Ok(())
    }
}

impl<T: Scalar> Default for HyperParams<T> {
    fn default() -> Self {
        Self::for_optimizer(OptimizerKind::AdaMuon)
    }
}

/// Result of one optimizer step.
#[derive(Clone, Debug)]
pub struct Step<T> {
    pub weights: Matrix<T>,
    /// Update before learning-rate scaling and weight decay. All zeros when
    /// the zero-momentum guard fired.
    pub direction: Matrix<T>,
    pub guarded: bool,
}

/// Per-parameter optimizer state of any kind.
#[derive(Clone, Debug)]
pub enum OptimizerState<T> {
    AdaMuon(AdaMuonState<T>),
    Muon(MuonState<T>),
    AdamW(AdamState<T>),
    SgdMomentum(SgdState<T>),
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(kind: OptimizerKind, rows: usize, cols: usize) -> Self {
        match kind {
            OptimizerKind::AdaMuon => Self::AdaMuon(AdaMuonState::new(rows, cols)),
            OptimizerKind::Muon => Self::Muon(MuonState::new(rows, cols)),
            OptimizerKind::AdamW => Self::AdamW(AdamState::new(rows, cols)),
            OptimizerKind::SgdMomentum => Self::SgdMomentum(SgdState::new(rows, cols)),
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        match self {
            Self::AdaMuon(_) => OptimizerKind::AdaMuon,
            Self::Muon(_) => OptimizerKind::Muon,
            Self::AdamW(_) => OptimizerKind::AdamW,
            Self::SgdMomentum(_) => OptimizerKind::SgdMomentum,
        }
    }

    /// Number of updates applied so far.
    pub fn steps_taken(&self) -> u64 {
        match self {
            Self::AdaMuon(s) => s.step,
            Self::Muon(s) => s.step,
            Self::AdamW(s) => s.step,
            Self::SgdMomentum(s) => s.step,
        }
    }

    pub fn step(
        &mut self,
        w: &Matrix<T>,
        g: &Matrix<T>,
        hp: &HyperParams<T>,
        lr: T,
    ) -> Result<Step<T>> {
        match self {
            Self::AdaMuon(s) => s.step(w, g, hp, lr),
            Self::Muon(s) => s.step(w, g, hp, lr),
            Self::AdamW(s) => s.step(w, g, hp, lr),
            Self::SgdMomentum(s) => s.step_sgd(w, g, hp, lr),
        }
    }
}

/// Common argument checks shared by every step function.
fn check_step_inputs<T: Scalar>(
    w: &Matrix<T>,
    g: &Matrix<T>,
    state_shape: (usize, usize),
    lr: T,
) -> Result<()> {
    w.ensure_same_shape(g, "optimizer step")?;
    if w.shape() != state_shape {
        return Err(Error::ShapeMismatch {
            op: "optimizer state",
            left: w.shape(),
            right: state_shape,
        });
    }
    w.ensure_finite("optimizer weights")?;
    g.ensure_finite("optimizer gradient")?;
    if !lr.is_finite() || lr < T::zero() {
        return Err(Error::InvalidHyperParams(format!(
            "learning rate must be >= 0, got {lr}"
        )));
    }
    Ok(())
}

/// `W − lr·(direction + λ·W)`, evaluated as `W·(1 − lr·λ) − lr·direction` so
/// a zero direction scales `W` by exactly `(1 − lr·λ)`.
fn apply_decoupled<T: Scalar>(
    w: &Matrix<T>,
    direction: &Matrix<T>,
    lr: T,
    lambda: T,
) -> Result<Matrix<T>> {
    let keep = T::one() - lr * lambda;
    w.zip_map(direction, |wi, di| wi * keep - lr * di)
}

/// Momentum update shared by AdaMuon, Muon and SGD-momentum.
fn accumulate_momentum<T: Scalar>(buf: &mut Matrix<T>, g: &Matrix<T>, beta: T, dampened: bool) {
    let gain = if dampened { T::one() - beta } else { T::one() };
    for (m, &gi) in buf.as_mut_slice().iter_mut().zip(g.as_slice()) {
        *m = beta * *m + gain * gi;
    }
}
