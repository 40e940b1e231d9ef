//! Dense matrix kernels, Newton–Schulz orthogonalization and the exact
//! decompositions used to check it.

mod matrix;
mod newton_schulz;
mod oracle;
mod sample;

pub use matrix::{frobenius_norm, matmul, rms, transpose, Matrix};
pub use newton_schulz::{
    newton_schulz, NsCoefficients, NsKind, CUBIC_TERMS, NS_EPS, QUINTIC_TERMS,
};
pub use oracle::{
    inverse_sqrt_psd, polar_left_gram, polar_oracle, polar_right_gram, svd_oracle, sym_eigen, Svd,
    SymEigen, MAX_JACOBI_SWEEPS, RANK_TOL,
};
pub use sample::{random_conditioned, random_gaussian, random_orthonormal};
