//! Matrix-aware optimizers for small dense problems.
//!
//! The centerpiece is [`optim::AdaMuonState`]: momentum, Newton–Schulz
//! orthogonalization, an element-wise second moment on the orthogonalized
//! direction, and a rescale that pins the update RMS at 0.2. Muon, AdamW and
//! SGD with momentum are provided as baselines, along with learning-rate
//! schedules, analytic test problems and a deterministic training harness.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the harness and tests use.

pub mod densecore;
pub mod error;
pub mod harness;
pub mod optim;
pub mod problems;
pub mod rng;
pub mod scalar;
pub mod schedule;

pub use densecore::{newton_schulz, polar_oracle, svd_oracle, NsCoefficients, NsKind};
pub use error::{Error, Result};
pub use optim::OptimizerKind;
pub use scalar::Scalar;
pub use schedule::{lr_at, ScheduleKind, ScheduleSpec};

pub type Matrix = densecore::Matrix<f64>;
pub type Matrix32 = densecore::Matrix<f32>;
pub type HyperParams = optim::HyperParams<f64>;
pub type AdaMuonState = optim::AdaMuonState<f64>;
pub type MuonState = optim::MuonState<f64>;
pub type AdamState = optim::AdamState<f64>;
pub type Problem = problems::Problem<f64>;
pub type NamedParams = problems::NamedParams<f64>;
