use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("newton-schulz input has zero Frobenius norm")]
    ZeroInput,

    #[error("matrix is rank deficient (smallest singular value {min_singular:e})")]
    RankDeficient { min_singular: f64 },

    #[error("jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("invalid newton-schulz coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("invalid hyper-parameters: {0}")]
    InvalidHyperParams(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("step {step} out of range for schedule of {total} steps")]
    StepOutOfRange { step: usize, total: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),

    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
