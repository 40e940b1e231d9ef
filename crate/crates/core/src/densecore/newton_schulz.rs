//! Newton–Schulz polar iteration.
//!
//! The input is normalized to unit Frobenius norm (slightly below, see
//! [`NS_EPS`]) so every singular value starts in `(0, 1)`, then an odd matrix
//! polynomial `X ← a·X + b·(XXᵀ)X [+ c·(XXᵀ)²X]` is applied a fixed number of
//! times. Wide orientation is used throughout: a tall input is transposed,
//! iterated and transposed back, so the Gram products are `min × min`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::matrix::Matrix;

/// Relative shrink applied on top of Frobenius normalization:
/// `X₀ = M / (‖M‖_F · (1 + NS_EPS))`.
pub const NS_EPS: f64 = 1e-7;

/// Classical cubic Newton–Schulz: `f(x) = 1.5x − 0.5x³`.
pub const CUBIC_TERMS: [f64; 2] = [1.5, -0.5];

/// Quintic coefficients used by production Muon implementations.
pub const QUINTIC_TERMS: [f64; 3] = [3.4445, -4.7750, 2.0315];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NsKind {
    Cubic,
    Quintic,
}

/// Odd polynomial coefficients for the iteration.
///
/// `terms[k]` multiplies `x^(2k+1)`. Cubic carries two terms, Quintic three,
/// and `f(1)` must lie in `[0.5, 1.5]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NsCoefficients {
    kind: NsKind,
    terms: Vec<f64>,
}

impl NsCoefficients {
    pub fn new(kind: NsKind, terms: &[f64]) -> Result<Self> {
        let expected = match kind {
            NsKind::Cubic => 2,
            NsKind::Quintic => 3,
        };
        if terms.len() != expected {
            return Err(Error::InvalidCoefficients(format!(
                "{kind:?} needs {expected} terms, got {}",
                terms.len()
            )));
        }
        if terms.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidCoefficients("non-finite term".into()));
        }
        let c = Self::new_unchecked(kind, terms);
        let at_one = c.eval(1.0);
        if !(0.5..=1.5).contains(&at_one) {
            return Err(Error::InvalidCoefficients(format!(
                "f(1) = {at_one} outside [0.5, 1.5]"
            )));
        }
        Ok(c)
    }

    /// Skips the `f(1)` sanity band. Only for fault-injection in the
    /// verification battery; normal code should use [`NsCoefficients::new`].
    pub fn new_unchecked(kind: NsKind, terms: &[f64]) -> Self {
        Self {
            kind,
            terms: terms.to_vec(),
        }
    }

    pub fn cubic() -> Self {
        Self::new_unchecked(NsKind::Cubic, &CUBIC_TERMS)
    }

    pub fn quintic() -> Self {
        Self::new_unchecked(NsKind::Quintic, &QUINTIC_TERMS)
    }

    pub fn kind(&self) -> NsKind {
        self.kind
    }

    pub fn terms(&self) -> &[f64] {
        &self.terms
    }

    /// Every term shifted by `delta`, without validation.
    pub fn perturbed(&self, delta: f64) -> Self {
        let terms: Vec<f64> = self.terms.iter().map(|t| t + delta).collect();
        Self::new_unchecked(self.kind, &terms)
    }

    /// Scalar polynomial `f(x)`, i.e. the map applied to each singular value.
    pub fn eval(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut pow = x;
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t * pow;
            pow *= x2;
        }
        acc
    }
}

impl Default for NsCoefficients {
    fn default() -> Self {
        Self::quintic()
    }
}

/// Approximates the polar factor of `m` with `steps` polynomial iterations.
///
/// Output has the shape of `m`. Fails on a zero or non-finite input and when
/// the iteration leaves the finite range (only possible with coefficients
/// that bypassed validation).
pub fn newton_schulz<T: Scalar>(
    m: &Matrix<T>,
    steps: usize,
    coeffs: &NsCoefficients,
) -> Result<Matrix<T>> {
    if steps == 0 {
        return Err(Error::InvalidHyperParams(
            "newton-schulz step count must be positive".into(),
        ));
    }
    m.ensure_finite("newton_schulz input")?;
    let norm = m.frobenius_norm();
    if norm == T::zero() {
        return Err(Error::ZeroInput);
    }

    let tall = m.rows() > m.cols();
    let x0 = if tall { m.transpose() } else { m.clone() };
    let mut x = x0.scaled((norm * T::lit(1.0 + NS_EPS)).recip());

    let t: Vec<T> = coeffs.terms().iter().map(|&c| T::lit(c)).collect();
    for _ in 0..steps {
        let a = x.gram_rows();
        x = match coeffs.kind() {
            NsKind::Cubic => {
                let ax = a.matmul(&x)?;
                x.zip_map(&ax, |xi, axi| t[0] * xi + t[1] * axi)?
            }
            NsKind::Quintic => {
                let aa = a.matmul(&a)?;
                let b = a.zip_map(&aa, |p, q| t[1] * p + t[2] * q)?;
                let bx = b.matmul(&x)?;
                x.zip_map(&bx, |xi, bxi| t[0] * xi + bxi)?
            }
        };
    }

    let out = if tall { x.transpose() } else { x };
    out.ensure_finite("newton_schulz output")?;
    Ok(out)
}
