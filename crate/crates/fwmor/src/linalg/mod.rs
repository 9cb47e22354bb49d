//! Dense real linear-algebra kernels.
//!
//! Lyapunov and Sylvester equations are solved with a real-Schur
//! Bartels-Stewart reduction; spectral factorization combines the Schur
//! form with shifted inverse iteration; contragradient balancing uses the
//! square-root (Cholesky + symmetric eigenvalue) formulation.

mod balance;
mod eigen;
mod sylvester;

pub use balance::contragradient_balance;
pub use eigen::spectral_factorization;
pub use sylvester::{solve_lyapunov, solve_sylvester};

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn system_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    ensure_finite("A", a)?;
    let (_, t) = sylvester::real_schur(a)?;
    Ok(sylvester::quasi_eigenvalues(&t))
}

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance declaring two pencil eigenvalues in collision.
pub(crate) const PENCIL_TOL: f64 = 1e-10;

pub(crate) fn ensure_finite(name: &'static str, m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

/// Horizontal concatenation. Zero-column blocks are skipped.
pub fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).max().unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut j = 0;
    for b in blocks {
        if b.ncols() == 0 {
            continue;
        }
        assert_eq!(b.nrows(), rows, "hstack: inconsistent row counts");
        out.view_mut((0, j), (rows, b.ncols())).copy_from(*b);
        j += b.ncols();
    }
    out
}

/// Vertical concatenation. Zero-row blocks are skipped.
pub fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.iter().map(|b| b.ncols()).max().unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut i = 0;
    for b in blocks {
        if b.nrows() == 0 {
            continue;
        }
        assert_eq!(b.ncols(), cols, "vstack: inconsistent column counts");
        out.view_mut((i, 0), (b.nrows(), cols)).copy_from(*b);
        i += b.nrows();
    }
    out
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    m.map(|z| z.re)
}

pub fn imag_part(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    m.map(|z| z.im)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Solve the complex system `a x = b` by LU, reporting pencil singularity.
pub(crate) fn complex_solve(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    what: &str,
) -> Result<DMatrix<Complex64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::SingularPencil(what.to_string()))
}

pub(crate) fn real_solve(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    what: &str,
) -> Result<DMatrix<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::SingularPencil(what.to_string()))
}

/// Thin-Q Householder orthonormalization with the LAPACK reflector sign
/// convention (the leading entry of each working column maps to
/// `-sign(x1) * ||x||`). The convention is observable through projected
/// reduced-order matrices, so it is pinned here rather than delegated to a
/// library QR.
pub fn orth(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    assert!(cols <= rows, "orth: more columns than rows");
    let mut r = m.clone();
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(cols);
    for k in 0..cols {
        let mut v = DVector::zeros(rows - k);
        for i in k..rows {
            v[i - k] = r[(i, k)];
        }
        let norm = v.norm();
        if norm > 0.0 {
            let beta = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= beta;
            let vtv = v.norm_squared();
            if vtv > 0.0 {
                for j in k..cols {
                    let mut dot = 0.0;
                    for i in k..rows {
                        dot += v[i - k] * r[(i, j)];
                    }
                    let scale = 2.0 * dot / vtv;
                    for i in k..rows {
                        r[(i, j)] -= scale * v[i - k];
                    }
                }
            }
        }
        reflectors.push(v);
    }
    // q_k = H_1 H_2 ... H_cols e_k, applied from the innermost reflector out
    let mut q = DMatrix::zeros(rows, cols);
    for k in 0..cols {
        let mut u = DVector::zeros(rows);
        u[k] = 1.0;
        for (j, v) in reflectors.iter().enumerate().rev() {
            let vtv = v.norm_squared();
            if vtv == 0.0 {
                continue;
            }
            let mut dot = 0.0;
            for i in j..rows {
                dot += v[i - j] * u[i];
            }
            let scale = 2.0 * dot / vtv;
            for i in j..rows {
                u[i] -= scale * v[i - j];
            }
        }
        q.set_column(k, &u);
    }
    q
}

/// Numerical rank from singular values, relative threshold `tol * s_max`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orth_single_column_uses_householder_sign() {
        let x = DMatrix::from_column_slice(5, 1, &[2.415163, 1.532942, 0.344159, 0.062793, -1.176652]);
        let q = orth(&x);
        // leading entry positive => reflected direction
        let expected = -&x / x.norm();
        assert!((q.column(0) - expected.column(0)).norm() < 1e-14);

        let y = -&x;
        let qy = orth(&y);
        assert!((qy.column(0) - expected.column(0)).norm() < 1e-14);
    }

    #[test]
    fn orth_produces_orthonormal_columns_spanning_input() {
        let m = DMatrix::from_fn(7, 3, |i, j| ((i * 3 + j) as f64 * 0.7).sin());
        let q = orth(&m);
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-12);
        // range check: m = q (q^T m)
        let proj = &q * (q.transpose() * &m);
        assert!((proj - &m).norm() < 1e-12);
    }

    #[test]
    fn stack_helpers_respect_empty_blocks() {
        let a = DMatrix::from_element(2, 2, 1.0);
        let empty = DMatrix::<f64>::zeros(2, 0);
        let h = hstack(&[&a, &empty, &a]);
        assert_eq!(h.shape(), (2, 4));
        let emptyv = DMatrix::<f64>::zeros(0, 2);
        let v = vstack(&[&a, &emptyv]);
        assert_eq!(v.shape(), (2, 2));
    }
}
