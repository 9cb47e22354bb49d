//! Contragradient (simultaneously diagonalizing) transformations.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

use super::ensure_finite;

/// Relative positive-definiteness tolerance.
const SPD_TOL: f64 = 1e-12;

/// Compute `t` and descending `sigma` with
/// `t^-1 p t^-T = t^T q t = diag(sigma)`.
///
/// Square-root form: Cholesky of `p`, then a symmetric eigendecomposition of
/// the congruence-transformed `q`. Forming the product `p q` explicitly would
/// square the conditioning, so it is avoided.
pub fn contragradient_balance(
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = p.nrows();
    if p.ncols() != n || q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(
            "contragradient balance needs two square matrices of equal size".into(),
        ));
    }
    ensure_finite("P", p)?;
    ensure_finite("Q", q)?;
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), Vec::new()));
    }

    let p_sym = 0.5 * (p + p.transpose());
    let q_sym = 0.5 * (q + q.transpose());
    check_spd("P", &p_sym)?;
    check_spd("Q", &q_sym)?;

    let chol = nalgebra::Cholesky::new(p_sym)
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky of P failed".into()))?;
    let l = chol.l();
    let mut m = l.transpose() * &q_sym * &l;
    let mt = m.transpose();
    m += mt;
    m *= 0.5;

    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("finite eigenvalues")
    });

    let mut u = DMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (k, &idx) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(idx).clone_owned();
        // deterministic eigenvector sign
        let mut pivot = 0;
        let mut mx = 0.0;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > mx {
                mx = x.abs();
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col = -col;
        }
        u.set_column(k, &col);
        sigma.push(eig.eigenvalues[idx].max(0.0).sqrt());
    }

    let mut t = &l * u;
    for (k, &s) in sigma.iter().enumerate() {
        if s <= 0.0 {
            return Err(Error::NotPositiveDefinite(
                "vanishing Hankel singular value".into(),
            ));
        }
        let scale = s.powf(-0.5);
        t.column_mut(k).scale_mut(scale);
    }
    Ok((t, sigma))
}

fn check_spd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max <= 0.0 || min <= SPD_TOL * max {
        return Err(Error::NotPositiveDefinite(format!(
            "{name}: eigenvalue range [{min:.3e}, {max:.3e}]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pair_is_already_balanced() {
        let (t, sigma) = contragradient_balance(&DMatrix::identity(3, 3), &DMatrix::identity(3, 3)).unwrap();
        for s in &sigma {
            assert!((s - 1.0).abs() < 1e-12);
        }
        // t is orthogonal up to signed permutation; defining relations hold
        let ti = t.clone().try_inverse().unwrap();
        assert!((&ti * ti.transpose() - DMatrix::identity(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn scalar_pair() {
        let p = DMatrix::from_element(1, 1, 4.0);
        let q = DMatrix::from_element(1, 1, 1.0);
        let (t, sigma) = contragradient_balance(&p, &q).unwrap();
        assert!((sigma[0] - 2.0).abs() < 1e-12);
        assert!((t[(0, 0)].abs() - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn defining_relations() {
        let l = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.4, 1.2, 0.0, -0.3, 0.7, 0.9]);
        let p = &l * l.transpose();
        let g = DMatrix::from_row_slice(3, 3, &[1.5, 0.2, 0.0, 0.2, 0.8, -0.1, 0.0, -0.1, 0.6]);
        let q = &g * g.transpose();
        let (t, sigma) = contragradient_balance(&p, &q).unwrap();
        let ti = t.clone().try_inverse().unwrap();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sigma.clone()));
        assert!((&ti * &p * ti.transpose() - &d).norm() < 1e-10);
        assert!((t.transpose() * &q * &t - &d).norm() < 1e-10);
        assert!(sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn indefinite_input_rejected() {
        let p = DMatrix::from_diagonal(&nalgebra::dvector![1.0, -0.1]);
        let q = DMatrix::identity(2, 2);
        assert!(matches!(
            contragradient_balance(&p, &q),
            Err(Error::NotPositiveDefinite(_))
        ));
    }
}
