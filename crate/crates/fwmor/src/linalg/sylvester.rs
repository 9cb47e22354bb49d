//! Bartels-Stewart solvers for dense Lyapunov and Sylvester equations.
//!
//! Both solvers reduce to real Schur form and back-substitute over the
//! quasi-triangular factors block column by block column, solving a small
//! (at most 4x4) Kronecker system per diagonal block pair.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

use super::{ensure_finite, symmetrize, PENCIL_TOL};

/// Real Schur decomposition `a = q t q^T` with `t` upper quasi-triangular.
pub(crate) fn real_schur(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)));
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::SingularPencil("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    Ok((q, t))
}

/// Diagonal block partition (start, size) of a quasi-triangular factor.
pub(crate) fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

/// Eigenvalues of a quasi-triangular factor, block by block.
pub(crate) fn quasi_eigenvalues(t: &DMatrix<f64>) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(t.nrows());
    for &(s, len) in &diagonal_blocks(t) {
        if len == 1 {
            out.push(Complex64::new(t[(s, s)], 0.0));
        } else {
            let (a, b) = (t[(s, s)], t[(s, s + 1)]);
            let (c, d) = (t[(s + 1, s)], t[(s + 1, s + 1)]);
            let mean = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc >= 0.0 {
                let r = disc.sqrt();
                out.push(Complex64::new(mean + r, 0.0));
                out.push(Complex64::new(mean - r, 0.0));
            } else {
                let r = (-disc).sqrt();
                out.push(Complex64::new(mean, r));
                out.push(Complex64::new(mean, -r));
            }
        }
    }
    out
}

fn check_pencil(la: &[Complex64], lb: &[Complex64]) -> Result<()> {
    for x in la {
        for y in lb {
            if (x + y).norm() <= PENCIL_TOL * (x.norm() + y.norm() + 1.0) {
                return Err(Error::SingularPencil(format!(
                    "eigenvalue collision {x} + {y} ~ 0"
                )));
            }
        }
    }
    Ok(())
}

/// Solve the (u x w) block equation `r_ii y + y m + f = 0`, u, w <= 2,
/// through the small Kronecker system (I (x) r_ii + m^T (x) I) vec(y) = -vec(f).
fn solve_small_block(
    r_ii: nalgebra::DMatrixView<'_, f64>,
    m: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let u = r_ii.nrows();
    let w = m.nrows();
    let dim = u * w;
    let mut k = DMatrix::zeros(dim, dim);
    // vec is column-major: entry (i, j) of y sits at j*u + i
    for j in 0..w {
        for i in 0..u {
            let row = j * u + i;
            for jj in 0..w {
                for ii in 0..u {
                    let col = jj * u + ii;
                    let mut val = 0.0;
                    if jj == j {
                        val += r_ii[(i, ii)];
                    }
                    if ii == i {
                        val += m[(jj, j)];
                    }
                    k[(row, col)] += val;
                }
            }
        }
    }
    let mut rhs = DMatrix::zeros(dim, 1);
    for j in 0..w {
        for i in 0..u {
            rhs[(j * u + i, 0)] = -f[(i, j)];
        }
    }
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularPencil("singular diagonal block pair".into()))?;
    let mut y = DMatrix::zeros(u, w);
    for j in 0..w {
        for i in 0..u {
            y[(i, j)] = sol[(j * u + i, 0)];
        }
    }
    Ok(y)
}

/// Solve `r y + y s + f = 0` for quasi-upper-triangular `r` and `s`
/// (`lower = false`), or quasi-lower-triangular `s` (`lower = true`,
/// used for the Lyapunov case `s = t^T`).
fn quasi_triangular_sylvester(
    r: &DMatrix<f64>,
    s: &DMatrix<f64>,
    f: &DMatrix<f64>,
    s_lower: bool,
) -> Result<DMatrix<f64>> {
    let n = r.nrows();
    let k = s.nrows();
    let row_blocks = diagonal_blocks(r);
    let col_blocks: Vec<(usize, usize)> = if s_lower {
        // blocks of a lower quasi-triangular matrix match those of its transpose
        diagonal_blocks(&s.transpose())
    } else {
        diagonal_blocks(s)
    };
    let mut y = DMatrix::zeros(n, k);

    let col_order: Vec<usize> = if s_lower {
        (0..col_blocks.len()).rev().collect()
    } else {
        (0..col_blocks.len()).collect()
    };
    for &cb in &col_order {
        let (cj, w) = col_blocks[cb];
        // rhs_j = f_j + sum over solved column blocks of y_k s_{k,j}
        let mut rhs = f.view((0, cj), (n, w)).clone_owned();
        for &ob in &col_order {
            if ob == cb {
                break;
            }
            let (ck, wk) = col_blocks[ob];
            let s_kj = s.view((ck, cj), (wk, w));
            if s_kj.iter().any(|&x| x != 0.0) {
                rhs += y.view((0, ck), (n, wk)) * s_kj;
            }
        }
        let s_jj = s.view((cj, cj), (w, w)).clone_owned();
        // row blocks bottom-up: r is upper quasi-triangular
        for &(ri, u) in row_blocks.iter().rev() {
            let mut local = rhs.view((ri, 0), (u, w)).clone_owned();
            // contributions of already-solved deeper rows
            let below = ri + u;
            if below < n {
                local += r.view((ri, below), (u, n - below)) * y.view((below, cj), (n - below, w));
            }
            let sol = solve_small_block(r.view((ri, ri), (u, u)), &s_jj, &local)?;
            y.view_mut((ri, cj), (u, w)).copy_from(&sol);
        }
    }
    Ok(y)
}

/// Solve the continuous Lyapunov equation `a x + x a^T + q = 0`.
///
/// The solution is symmetrized when `q` is symmetric, so that roundoff
/// asymmetry never propagates into downstream balancing.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "Lyapunov: A must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "Lyapunov: Q must be {n}x{n}, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    ensure_finite("A", a)?;
    ensure_finite("Q", q)?;
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }

    let (u, t) = real_schur(a)?;
    let eigs = quasi_eigenvalues(&t);
    check_pencil(&eigs, &eigs)?;

    let f = u.transpose() * q * &u;
    let tt = t.transpose();
    let y = quasi_triangular_sylvester(&t, &tt, &f, true)?;
    let mut x = &u * y * u.transpose();
    let q_sym = (q - q.transpose()).norm() <= 1e-13 * (1.0 + q.norm());
    if q_sym {
        symmetrize(&mut x);
    }
    Ok(x)
}

/// Solve the Sylvester equation `a x + x b + c = 0`.
pub fn solve_sylvester(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let k = b.nrows();
    if a.ncols() != n || b.ncols() != k {
        return Err(Error::DimensionMismatch(
            "Sylvester: A and B must be square".into(),
        ));
    }
    if c.shape() != (n, k) {
        return Err(Error::DimensionMismatch(format!(
            "Sylvester: C must be {n}x{k}, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    ensure_finite("A", a)?;
    ensure_finite("B", b)?;
    ensure_finite("C", c)?;
    if n == 0 || k == 0 {
        return Ok(DMatrix::zeros(n, k));
    }

    let (ua, ta) = real_schur(a)?;
    let (ub, tb) = real_schur(b)?;
    check_pencil(&quasi_eigenvalues(&ta), &quasi_eigenvalues(&tb))?;

    let f = ua.transpose() * c * &ub;
    let y = quasi_triangular_sylvester(&ta, &tb, &f, false)?;
    Ok(&ua * y * ub.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lyap_residual(a: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
        let r = a * x + x * a.transpose() + q;
        r.norm() / (q.norm() + 2.0 * a.norm() * x.norm()).max(1.0)
    }

    #[test]
    fn scalar_lyapunov() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let q = DMatrix::from_element(1, 1, 2.0);
        let x = solve_lyapunov(&a, &q).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_lyapunov() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]);
        let x = solve_lyapunov(&a, &DMatrix::identity(2, 2)).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((x[(1, 1)] - 0.25).abs() < 1e-14);
        assert!(x[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn upper_triangular_lyapunov_matches_contract() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -2.0]);
        let q = DMatrix::from_element(2, 2, 1.0);
        let x = solve_lyapunov(&a, &q).unwrap();
        assert!(lyap_residual(&a, &q, &x) < 1e-12);
        assert!((x.clone() - x.transpose()).norm() < 1e-13);
    }

    #[test]
    fn scalar_sylvester() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let b = DMatrix::from_element(1, 1, -2.0);
        let c = DMatrix::from_element(1, 1, 3.0);
        let x = solve_sylvester(&a, &b, &c).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decoupled_sylvester() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -3.0]);
        let b = DMatrix::from_element(1, 1, -1.0);
        let c = DMatrix::from_column_slice(2, 1, &[2.0, 4.0]);
        let x = solve_sylvester(&a, &b, &c).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((x[(1, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_spectrum_lyapunov() {
        // eigenvalues -1 +/- 2i and -3: exercises the 2x2 block path
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-1.0, 2.0, 0.5, -2.0, -1.0, 0.3, 0.0, 0.0, -3.0],
        );
        let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.1, 1.0, 0.2, 0.0, 0.2, 3.0]);
        let x = solve_lyapunov(&a, &q).unwrap();
        assert!(lyap_residual(&a, &q, &x) < 1e-12);
    }

    #[test]
    fn shared_eigenvalue_is_singular_pencil() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let b = DMatrix::from_element(1, 1, 1.0);
        let c = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(
            solve_sylvester(&a, &b, &c),
            Err(Error::SingularPencil(_))
        ));
    }

    #[test]
    fn marginal_lyapunov_rejected() {
        // eigenvalues +/- i: lambda_i + lambda_j = 0
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let q = DMatrix::identity(2, 2);
        assert!(matches!(
            solve_lyapunov(&a, &q),
            Err(Error::SingularPencil(_))
        ));
    }

    #[test]
    fn non_finite_rejected() {
        let a = DMatrix::from_element(1, 1, f64::NAN);
        let q = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(solve_lyapunov(&a, &q), Err(Error::NonFinite(_))));
    }
}
