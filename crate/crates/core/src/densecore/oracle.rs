//! Exact decompositions used to verify the Newton–Schulz path.
//!
//! Nothing here runs during training. The SVD is one-sided (Hestenes) Jacobi;
//! the symmetric eigensolver is classical two-sided cyclic Jacobi, which gives
//! an independent second route to the polar factor via `(MMᵀ)^{-1/2}·M`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::matrix::Matrix;

/// Sweep cap for both Jacobi solvers.
pub const MAX_JACOBI_SWEEPS: usize = 60;

/// Singular values at or below this are treated as zero by [`polar_oracle`].
pub const RANK_TOL: f64 = 1e-12;

/// Thin SVD `m = U·diag(s)·Vᵀ`.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    /// `rows × r`, orthonormal columns.
    pub u: Matrix<T>,
    /// Length `r = min(rows, cols)`, non-negative, descending.
    pub s: Vec<T>,
    /// `cols × r`, orthonormal columns.
    pub v: Matrix<T>,
}

impl<T: Scalar> Svd<T> {
    pub fn reconstruct(&self) -> Matrix<T> {
        let us = Matrix::from_fn(self.u.rows(), self.s.len(), |i, j| {
            self.u[(i, j)] * self.s[j]
        });
        us.matmul(&self.v.transpose())
            .expect("svd factor shapes agree")
    }
}

pub fn svd_oracle<T: Scalar>(m: &Matrix<T>) -> Result<Svd<T>> {
    m.ensure_finite("svd_oracle")?;
    if m.rows() < m.cols() {
        let Svd { u, s, v } = svd_tall(&m.transpose())?;
        return Ok(Svd { u: v, s, v: u });
    }
    svd_tall(m)
}

/// One-sided Jacobi on the columns of a matrix with `rows ≥ cols`.
fn svd_tall<T: Scalar>(m: &Matrix<T>) -> Result<Svd<T>> {
    let (n, r) = m.shape();
    debug_assert!(n >= r);
    // column-major working copy: cols[j] is column j
    let mut cols: Vec<Vec<T>> = (0..r)
        .map(|j| (0..n).map(|i| m[(i, j)]).collect())
        .collect();
    let mut v: Vec<Vec<T>> = (0..r)
        .map(|j| {
            (0..r)
                .map(|i| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();

    let tol = T::epsilon();
    let mut converged = r < 2;
    for _ in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..r - 1 {
            for q in p + 1..r {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let (c, s) = jacobi_rotation(alpha, beta, gamma);
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: MAX_JACOBI_SWEEPS,
        });
    }

    let mut s: Vec<T> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).expect("finite singular values"));

    let zero_cut = s.iter().fold(T::zero(), |a, &b| a.max(b)) * T::epsilon() * T::lit(n as f64);
    let mut u_cols: Vec<Vec<T>> = Vec::with_capacity(r);
    let mut v_cols: Vec<Vec<T>> = Vec::with_capacity(r);
    let mut sorted_s = Vec::with_capacity(r);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let sj = s[j];
        if sj > zero_cut && sj > T::zero() {
            u_cols.push(cols[j].iter().map(|&x| x / sj).collect());
        } else {
            u_cols.push(vec![T::zero(); n]);
            missing.push(k);
            s[j] = T::zero();
        }
        sorted_s.push(s[j]);
        v_cols.push(v[j].clone());
    }
    complete_basis(&mut u_cols, &missing, n);

    let u = Matrix::from_fn(n, r, |i, j| u_cols[j][i]);
    let v = Matrix::from_fn(r, r, |i, j| v_cols[j][i]);
    Ok(Svd { u, s: sorted_s, v })
}

/// Rotation `(c, s)` that zeroes the off-diagonal of `[[α, γ], [γ, β]]`.
fn jacobi_rotation<T: Scalar>(alpha: T, beta: T, gamma: T) -> (T, T) {
    let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
    let c = (T::one() + t * t).sqrt().recip();
    (c, c * t)
}

fn rotate_pair<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Fills the columns listed in `missing` with unit vectors orthogonal to all
/// others, trying standard basis vectors in order. For the zero matrix this
/// yields identity columns.
fn complete_basis<T: Scalar>(cols: &mut [Vec<T>], missing: &[usize], n: usize) {
    // unfilled columns are still zero and project to nothing
    let mut candidate = 0;
    for &k in missing {
        while candidate < n {
            let mut e = vec![T::zero(); n];
            e[candidate] = T::one();
            candidate += 1;
            // two rounds of Gram-Schmidt
            for _ in 0..2 {
                for c in cols.iter() {
                    let proj = dot(&e, c);
                    for (ei, &ci) in e.iter_mut().zip(c) {
                        *ei -= proj * ci;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > T::lit(0.5) {
                cols[k] = e.into_iter().map(|x| x / norm).collect();
                break;
            }
        }
    }
}

/// Exact polar factor `U·Vᵀ` of a full-rank matrix.
pub fn polar_oracle<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let svd = svd_oracle(m)?;
    let min_s = svd.s.last().copied().unwrap_or_else(T::zero);
    if min_s <= T::lit(RANK_TOL) {
        return Err(Error::RankDeficient {
            min_singular: min_s.as_f64(),
        });
    }
    svd.u.matmul(&svd.v.transpose())
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen<T> {
    /// Descending.
    pub values: Vec<T>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: Matrix<T>,
}

/// Cyclic two-sided Jacobi eigensolver. Only the upper triangle is trusted
/// to be symmetric with the lower one; no check is made.
pub fn sym_eigen<T: Scalar>(a: &Matrix<T>) -> Result<SymEigen<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::ShapeMismatch {
            op: "sym_eigen",
            left: a.shape(),
            right: (n, n),
        });
    }
    a.ensure_finite("sym_eigen")?;
    let mut a = a.clone();
    let mut v = Matrix::<T>::identity(n);

    // A rotation is skipped once |a_pq| is negligible against the geometric
    // mean of its diagonal pair or against ‖A‖_F itself (the round-off floor
    // of a rank-deficient block); a sweep without rotations ends the loop.
    let scale = a.frobenius_norm();
    let floor = (T::epsilon() * scale).max(T::min_positive_value());
    let mut converged = scale == T::zero();
    for _ in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= T::epsilon() * (a[(p, p)] * a[(q, q)]).abs().sqrt()
                    || apq.abs() <= floor
                {
                    continue;
                }
                rotated = true;
                let (c, s) = jacobi_rotation(a[(p, p)], a[(q, q)], apq);
                // A ← Jᵀ A J with J acting on columns/rows p, q
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: MAX_JACOBI_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        a[(y, y)]
            .partial_cmp(&a[(x, x)])
            .expect("finite eigenvalues")
    });
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SymEigen { values, vectors })
}

/// `A^{-1/2}` on the span of the `rank` largest eigenvalues of a symmetric
/// positive semi-definite `A`, zero on the complement (pseudo-inverse root).
pub fn inverse_sqrt_psd<T: Scalar>(a: &Matrix<T>, rank: usize) -> Result<Matrix<T>> {
    let eig = sym_eigen(a)?;
    let n = a.rows();
    let rank = rank.min(n);
    if let Some(&smallest) = eig.values[..rank].last() {
        if smallest <= T::zero() {
            return Err(Error::RankDeficient {
                min_singular: smallest.max(T::zero()).sqrt().as_f64(),
            });
        }
    }
    let w: Vec<T> = eig.values[..rank]
        .iter()
        .map(|&l| l.sqrt().recip())
        .collect();
    Ok(Matrix::from_fn(n, n, |i, j| {
        (0..rank)
            .map(|k| eig.vectors[(i, k)] * w[k] * eig.vectors[(j, k)])
            .sum()
    }))
}

/// `(M Mᵀ)^{-1/2} M`, computed through the eigensolver.
pub fn polar_left_gram<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let r = m.rows().min(m.cols());
    inverse_sqrt_psd(&m.gram_rows(), r)?.matmul(m)
}

/// `M (Mᵀ M)^{-1/2}`, computed through the eigensolver.
pub fn polar_right_gram<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let r = m.rows().min(m.cols());
    m.matmul(&inverse_sqrt_psd(&m.transpose().gram_rows(), r)?)
}
