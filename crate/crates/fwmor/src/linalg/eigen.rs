//! Spectral factorization of real matrices with simple spectra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

use super::sylvester::{quasi_eigenvalues, real_schur};
use super::to_complex;

/// Maximum admissible eigenvector-matrix condition number.
const COND_LIMIT: f64 = 1e12;

/// Factor `a = r diag(eigenvalues) r^-1`.
///
/// Eigenvalues come back sorted ascending by (real part, imaginary part),
/// which keeps complex conjugates adjacent. Each eigenvector has unit norm
/// with its largest-modulus entry rotated to the positive real axis, and the
/// vector for a conjugate eigenvalue is the exact conjugate of its partner.
pub fn spectral_factorization(
    a: &DMatrix<f64>,
) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "spectral factorization needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    super::ensure_finite("A", a)?;
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }

    let (_, t) = real_schur(a)?;
    let mut eigs = quasi_eigenvalues(&t);
    eigs.sort_by(|x, y| {
        (x.re, x.im)
            .partial_cmp(&(y.re, y.im))
            .expect("finite eigenvalues")
    });

    let ac = to_complex(a);
    let a_norm = a.norm();
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    let mut i = 0;
    while i < n {
        let lambda = eigs[i];
        if lambda.im < 0.0 {
            // conjugate pair sorted (im < 0, im > 0): compute the im > 0
            // member and conjugate it for this slot
            let v = inverse_iteration(&ac, eigs[i + 1], a_norm)?;
            r.set_column(i, &v.map(|z| z.conj()));
            r.set_column(i + 1, &v);
            i += 2;
        } else {
            let v = inverse_iteration(&ac, lambda, a_norm)?;
            r.set_column(i, &v);
            i += 1;
        }
    }

    // diagonalizability gate: 1-norm condition estimate of r
    let lu = r.clone().lu();
    let r_inv = lu
        .try_inverse()
        .ok_or(Error::DefectiveMatrix { cond: f64::INFINITY })?;
    let cond = one_norm(&r) * one_norm(&r_inv);
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(Error::DefectiveMatrix { cond });
    }
    Ok((eigs, r))
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// A few rounds of shifted inverse iteration. The Schur eigenvalue is
/// accurate to machine precision, so two solves normally reach the
/// invariant direction; extra rounds only run while the residual improves.
fn inverse_iteration(
    ac: &DMatrix<Complex64>,
    lambda: Complex64,
    a_norm: f64,
) -> Result<DVector<Complex64>> {
    let n = ac.nrows();
    let mut shifted = ac.clone();
    for i in 0..n {
        shifted[(i, i)] -= lambda;
    }
    let mut lu = shifted.clone().lu();
    if !lu.is_invertible() {
        // exactly singular shift: nudge along the spectral radius scale
        let nudge = Complex64::new(1e-13 * (1.0 + lambda.norm()), 0.0);
        for i in 0..n {
            shifted[(i, i)] -= nudge;
        }
        lu = shifted.lu();
    }

    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 + 1e-3 * i as f64, 0.0));
    v /= Complex64::new(v.norm(), 0.0);
    let mut best: Option<(f64, DVector<Complex64>)> = None;
    for _ in 0..5 {
        let Some(w) = lu.solve(&v) else {
            return Err(Error::DefectiveMatrix { cond: f64::INFINITY });
        };
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        v = w / Complex64::new(norm, 0.0);
        let res = (ac * &v - &v * lambda).norm() / a_norm.max(1.0);
        let improved = best.as_ref().map_or(true, |(b, _)| res < *b);
        if improved {
            best = Some((res, v.clone()));
        }
        if res < 1e-13 {
            break;
        }
    }
    let (_, mut v) = best.ok_or(Error::DefectiveMatrix { cond: f64::INFINITY })?;

    // deterministic phase: rotate the largest-modulus entry to +real
    let mut k = 0;
    let mut mx = 0.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > mx {
            mx = z.norm();
            k = i;
        }
    }
    let phase = v[k] / Complex64::new(mx, 0.0);
    v /= phase;
    v /= Complex64::new(v.norm(), 0.0);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_form_eigenvalues() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let (eigs, r) = spectral_factorization(&a).unwrap();
        assert!((eigs[0].re + 2.0).abs() < 1e-12 && eigs[0].im.abs() < 1e-12);
        assert!((eigs[1].re + 1.0).abs() < 1e-12);
        let lam = DMatrix::from_diagonal(&DVector::from_vec(eigs));
        let res = to_complex(&a) * &r - &r * lam;
        assert!(res.norm() <= 1e-8 * a.norm());
    }

    #[test]
    fn scalar_case() {
        let a = DMatrix::from_element(1, 1, -5.8318);
        let (eigs, _) = spectral_factorization(&a).unwrap();
        assert!((eigs[0].re + 5.8318).abs() < 1e-14);
    }

    #[test]
    fn conjugate_pairs_sorted_and_conjugated() {
        // spectrum: -1 +/- 2i, -3
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-1.0, 2.0, 1.0, -2.0, -1.0, 0.0, 0.0, 0.0, -3.0],
        );
        let (eigs, r) = spectral_factorization(&a).unwrap();
        assert!((eigs[0].re + 3.0).abs() < 1e-10);
        assert!((eigs[1] - Complex64::new(-1.0, -2.0)).norm() < 1e-10);
        assert!((eigs[2] - Complex64::new(-1.0, 2.0)).norm() < 1e-10);
        let diff = r.column(1).map(|z| z.conj()) - r.column(2).clone_owned();
        assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn defective_matrix_rejected() {
        // Jordan block: not diagonalizable
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        assert!(matches!(
            spectral_factorization(&a),
            Err(Error::DefectiveMatrix { .. })
        ));
    }
}
