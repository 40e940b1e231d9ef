//! Seeded random matrices with controlled spectra.

use crate::rng::Rng;
use crate::scalar::Scalar;

use super::matrix::Matrix;

pub fn random_gaussian<T: Scalar>(rng: &mut Rng, rows: usize, cols: usize) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| T::lit(rng.normal()))
}

/// `rows × cols` (`rows ≥ cols`) with orthonormal columns, from Gram–Schmidt
/// (applied twice) on a Gaussian matrix.
pub fn random_orthonormal<T: Scalar>(rng: &mut Rng, rows: usize, cols: usize) -> Matrix<T> {
    assert!(rows >= cols, "need rows >= cols for orthonormal columns");
    let g: Matrix<f64> = random_gaussian(rng, rows, cols);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v: Vec<f64> = (0..rows).map(|i| g[(i, j)]).collect();
        for _ in 0..2 {
            for prev in &q {
                let d: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(a, b)| *a -= d * b);
            }
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        q.push(v.into_iter().map(|a| a / n).collect());
    }
    Matrix::from_fn(rows, cols, |i, j| T::lit(q[j][i]))
}

/// `U·diag(s)·Vᵀ` with Haar-like random `U`, `V` and singular values spread
/// log-uniformly over `[1/condition, 1]`, endpoints included (for `r ≥ 2`).
pub fn random_conditioned<T: Scalar>(
    rng: &mut Rng,
    rows: usize,
    cols: usize,
    condition: f64,
) -> Matrix<T> {
    assert!(condition >= 1.0);
    let r = rows.min(cols);
    let u: Matrix<f64> = random_orthonormal(rng, rows, r);
    let v: Matrix<f64> = random_orthonormal(rng, cols, r);
    let mut s: Vec<f64> = (0..r)
        .map(|k| match k {
            0 => 1.0,
            k if k == r - 1 => 1.0 / condition,
            _ => (-rng.uniform() * condition.ln()).exp(),
        })
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let us = Matrix::from_fn(rows, r, |i, k| u[(i, k)] * s[k]);
    let m = us.matmul(&v.transpose()).expect("factor shapes agree");
    m.cast()
}
