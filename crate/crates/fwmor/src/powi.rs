//! Single-shot pseudo-optimal weighted interpolation.
//!
//! Both reducers build a rational Krylov basis of the weight-augmented
//! system, recover the Sylvester quadruple (S, L) of that basis, solve a
//! small weighted Gramian, and assemble a reduced model whose poles sit at
//! the mirror images of the interpolation points. The input-sided variant
//! satisfies the first-order optimality condition associated with the
//! reduced output map, the output-sided variant the one associated with the
//! reduced input map; both inherit stability from the shift placement.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gramians::{
    fw_input_data, fw_output_data, rom_input_gramians, rom_output_gramians, FWInputData,
    FWOutputData,
};
use crate::linalg::{self, hstack, orth, to_complex};
use crate::sys::{InterpolationData, StateSpaceModel};

/// A rational Krylov basis together with its Sylvester quadruple and the
/// small weighted Gramian of the parameterized pair.
#[derive(Debug, Clone)]
pub struct KrylovFrame {
    /// Stacked basis of the augmented state space, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// Rows of `basis` belonging to the plant block.
    pub plant_rows: usize,
    pub s: DMatrix<f64>,
    /// Tangential residual matrix: `L_i` (m x r) on the input side,
    /// `L_o` (r x p) on the output side.
    pub l: DMatrix<f64>,
    pub l1: DMatrix<f64>,
    pub l2: DMatrix<f64>,
    /// `P_s` or `Q_s`; symmetric positive definite.
    pub small_gramian: DMatrix<f64>,
}

impl KrylovFrame {
    /// Plant-block rows of the basis (the reduction subspace).
    pub fn reduced_block(&self) -> DMatrix<f64> {
        self.basis.rows(0, self.plant_rows).clone_owned()
    }

    /// Weight-block rows of the basis.
    pub fn tail_block(&self) -> DMatrix<f64> {
        self.basis
            .rows(self.plant_rows, self.basis.nrows() - self.plant_rows)
            .clone_owned()
    }
}

/// Reduced model plus the construction data and diagnostics.
#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub rom: StateSpaceModel,
    pub frame: Option<KrylovFrame>,
    pub rom_poles: Vec<Complex64>,
    /// Low-rank factor `F` of the approximate weighted Gramian `F F^T`
    /// (controllability for the input side, observability for the output
    /// side).
    pub approx_gramian_factor: Option<DMatrix<f64>>,
    pub diagnostics: BTreeMap<String, f64>,
    pub iterations: usize,
}

const DEGENERATE_RESIDUAL_TOL: f64 = 1e-10;
const BASIS_RANK_TOL: f64 = 1e-10;

/// Shifted solves `(sigma I - A_aug)^-1 feed dir`, realified into an
/// orthonormal basis. Column order follows the representative order (real
/// part, then |imaginary part|), with the real column of a conjugate pair
/// before the imaginary one.
fn shifted_basis(
    a_aug: &DMatrix<f64>,
    feed: &DMatrix<f64>,
    data: &InterpolationData,
    side: Side,
) -> Result<DMatrix<f64>> {
    let na = a_aug.nrows();
    let mut cols: Vec<DMatrix<f64>> = Vec::new();
    for point in data.representatives() {
        let dir = match side {
            Side::Input => point.right.as_ref(),
            Side::Output => point.left.as_ref(),
        }
        .ok_or_else(|| {
            Error::DimensionMismatch(format!(
                "{} tangential directions required",
                match side {
                    Side::Input => "right",
                    Side::Output => "left",
                }
            ))
        })?;
        if dir.len() != feed.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "tangential direction length {} does not match feed width {}",
                dir.len(),
                feed.ncols()
            )));
        }
        let sigma = point.shift;
        if sigma.im == 0.0 {
            let mut pencil = -a_aug.clone();
            for i in 0..na {
                pencil[(i, i)] += sigma.re;
            }
            let dir_re = DMatrix::from_fn(dir.len(), 1, |i, _| dir[i].re);
            let rhs = feed * dir_re;
            let x = linalg::real_solve(&pencil, &rhs, "shifted solve")
                .map_err(shift_collision(sigma))?;
            cols.push(x);
        } else {
            let mut pencil = to_complex(a_aug).map(|z| -z);
            for i in 0..na {
                pencil[(i, i)] += sigma;
            }
            let dir_m = DMatrix::from_fn(dir.len(), 1, |i, _| dir[i]);
            let rhs = to_complex(feed) * dir_m;
            let x = linalg::complex_solve(&pencil, &rhs, "shifted solve")
                .map_err(shift_collision(sigma))?;
            cols.push(linalg::real_part(&x));
            cols.push(linalg::imag_part(&x));
        }
    }
    let refs: Vec<&DMatrix<f64>> = cols.iter().collect();
    let stacked = hstack(&refs);
    let want = stacked.ncols();
    let rank = linalg::numerical_rank(&stacked, BASIS_RANK_TOL);
    if rank < want {
        return Err(Error::DeflatedBasis { rank, want });
    }
    Ok(orth(&stacked))
}

fn shift_collision(sigma: Complex64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::SingularPencil(_) => {
            Error::ShiftCollision(format!("shift {sigma} lies in the augmented spectrum"))
        }
        other => other,
    }
}

#[derive(Clone, Copy)]
enum Side {
    Input,
    Output,
}

fn check_spd_small(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max <= 0.0 || min <= 1e-12 * max {
        return Err(Error::NotPositiveDefinite(format!(
            "{name}: eigenvalue range [{min:.3e}, {max:.3e}] — interpolation data inconsistent"
        )));
    }
    Ok(())
}

/// Build the input rational Krylov frame for the augmented pair
/// `(A_i, B_F)` at the given shifts and right directions.
pub fn input_krylov(fwin: &FWInputData, data: &InterpolationData) -> Result<KrylovFrame> {
    let a_i = fwin.hi.a();
    let n = a_i.nrows() - fwin.weight.order();
    let v_a = shifted_basis(a_i, &fwin.b_f, data, Side::Input)?;
    let r = v_a.ncols();

    // w_a = v_a (v_a^T v_a)^-1; the basis is orthonormal, so this is v_a,
    // but the formula is kept so any basis of the subspace would do
    let gram = v_a.transpose() * &v_a;
    let gram_chol = Cholesky::new(gram)
        .ok_or_else(|| Error::DeflatedBasis { rank: 0, want: r })?;
    let w_a = gram_chol.solve(&v_a.transpose()).transpose();

    let a_hat = w_a.transpose() * a_i * &v_a;
    let b_hat = w_a.transpose() * &fwin.b_f;
    let b_perp = &fwin.b_f - &v_a * &b_hat;
    let smin = b_perp.clone().singular_values().min();
    if smin < DEGENERATE_RESIDUAL_TOL * fwin.b_f.norm() {
        return Err(Error::DegenerateResidual(smin));
    }
    let residual = a_i * &v_a - &v_a * &a_hat;
    let normal = b_perp.transpose() * &b_perp;
    let l_i = Cholesky::new(normal)
        .ok_or(Error::DegenerateResidual(smin))?
        .solve(&(b_perp.transpose() * residual));
    let s = &a_hat - &b_hat * &l_i;

    let v_b = v_a.rows(n, a_i.nrows() - n).clone_owned();
    let v = &fwin.weight;
    let vbt_cvt = v_b.transpose() * v.c().transpose();
    let lit = l_i.transpose();
    let l1 = hstack(&[&(-&lit), &vbt_cvt, &(-&lit * v.d())]);
    let l2 = hstack(&[&vbt_cvt, &(-&lit), &(-&lit * v.d())]);
    let mut p_s = linalg::solve_lyapunov(&(-s.transpose()), &(&l1 * l2.transpose()))?;
    linalg::symmetrize(&mut p_s);
    check_spd_small("P_s", &p_s)?;

    Ok(KrylovFrame {
        basis: v_a,
        plant_rows: n,
        s,
        l: l_i,
        l1,
        l2,
        small_gramian: p_s,
    })
}

/// Build the output rational Krylov frame for the dual pair
/// `(A_o^T, C_G^T)` at the given shifts and left directions.
pub fn output_krylov(fwout: &FWOutputData, data: &InterpolationData) -> Result<KrylovFrame> {
    let a_o = fwout.ho.a();
    let n = a_o.nrows() - fwout.weight.order();
    let a_ot = a_o.transpose();
    let cgt = fwout.c_g.transpose();
    let w_a = shifted_basis(&a_ot, &cgt, data, Side::Output)?;
    let r = w_a.ncols();

    let gram = w_a.transpose() * &w_a;
    let gram_chol = Cholesky::new(gram)
        .ok_or_else(|| Error::DeflatedBasis { rank: 0, want: r })?;
    let w_o = gram_chol.solve(&w_a.transpose()).transpose();

    let a_hat = w_o.transpose() * a_o * &w_a;
    let c_hat = &fwout.c_g * &w_a;
    let c_perp = &fwout.c_g - &c_hat * w_o.transpose();
    let smin = c_perp.clone().singular_values().min();
    if smin < DEGENERATE_RESIDUAL_TOL * fwout.c_g.norm() {
        return Err(Error::DegenerateResidual(smin));
    }
    let residual = w_o.transpose() * a_o - &a_hat * w_o.transpose();
    let normal = &c_perp * c_perp.transpose();
    // l_o = residual c_perp^T (c_perp c_perp^T)^-1, solved transposed
    let l_o = Cholesky::new(normal)
        .ok_or(Error::DegenerateResidual(smin))?
        .solve(&(&c_perp * residual.transpose()))
        .transpose();
    let s = &a_hat - &l_o * &c_hat;

    let w_b = w_a.rows(n, a_o.nrows() - n).clone_owned();
    let w = &fwout.weight;
    let wbt_bw = w_b.transpose() * w.b();
    let l1t = hstack(&[&(-&l_o), &wbt_bw, &(-&l_o * w.d().transpose())]);
    let l2t = hstack(&[&wbt_bw, &(-&l_o), &(-&l_o * w.d().transpose())]);
    let mut q_s = linalg::solve_lyapunov(&(-&s), &(&l1t * l2t.transpose()))?;
    linalg::symmetrize(&mut q_s);
    check_spd_small("Q_s", &q_s)?;

    Ok(KrylovFrame {
        basis: w_a,
        plant_rows: n,
        s,
        l: l_o,
        l1: l1t.transpose(),
        l2: l2t.transpose(),
        small_gramian: q_s,
    })
}

fn require_rhp(data: &InterpolationData) -> Result<()> {
    if !data.all_in_open_rhp() {
        let bad = data
            .shifts()
            .into_iter()
            .find(|s| s.re <= 0.0)
            .expect("offending shift");
        return Err(Error::UnstableShift(format!("{bad}")));
    }
    Ok(())
}

/// Cholesky factor of the inverse of an SPD matrix.
fn inverse_cholesky_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(m.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("small weighted Gramian".into()))?;
    let mut inv = chol.inverse();
    linalg::symmetrize(&mut inv);
    let chol_inv = Cholesky::new(inv)
        .ok_or_else(|| Error::NotPositiveDefinite("inverse of small weighted Gramian".into()))?;
    Ok(chol_inv.l())
}

/// Input-sided single-shot reducer (right tangential data, input weight).
///
/// The reduced model satisfies the optimality condition tied to its output
/// map exactly, interpolates the weighted transfer map at the shifts, and
/// has poles at their mirror images.
pub fn ipowi(
    g: &StateSpaceModel,
    v: Option<&StateSpaceModel>,
    data: &InterpolationData,
) -> Result<ReductionResult> {
    require_rhp(data)?;
    let fwin = fw_input_data(g, v)?;
    let frame = input_krylov(&fwin, data)?;

    let p_s = &frame.small_gramian;
    let chol = Cholesky::new(p_s.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("P_s".into()))?;
    let a_r = -chol.solve(&(frame.s.transpose() * p_s));
    let b_r = -chol.solve(&frame.l.transpose());
    let v_r = frame.reduced_block();
    let c_r = g.c() * &v_r;
    let rom = StateSpaceModel::new(a_r, b_r, c_r, g.d().clone())?;

    let factor = &v_r * inverse_cholesky_factor(p_s)?;
    let rom_poles = rom.eigenvalues()?;

    let mut diagnostics = BTreeMap::new();
    let a_i = fwin.hi.a();
    let sylv_res = (a_i * &frame.basis - &frame.basis * &frame.s - &fwin.b_f * &frame.l).norm()
        / (a_i.norm() * frame.basis.norm()).max(1.0);
    diagnostics.insert("sylvester_identity_rel".into(), sylv_res);
    let roms = rom_input_gramians(g, &rom, &fwin)?;
    let opt = rom.c() * &roms.pe_rom - g.c() * &roms.phat_12;
    let scale = (g.c() * &roms.phat_12).norm().max(f64::MIN_POSITIVE);
    diagnostics.insert("pseudo_optimality_abs".into(), opt.norm());
    diagnostics.insert("pseudo_optimality_rel".into(), opt.norm() / scale);
    diagnostics.insert(
        "pole_placement_rel".into(),
        pole_placement_error(&rom_poles, data),
    );

    Ok(ReductionResult {
        rom,
        frame: Some(frame),
        rom_poles,
        approx_gramian_factor: Some(factor),
        diagnostics,
        iterations: 1,
    })
}

/// Output-sided single-shot reducer (left tangential data, output weight).
pub fn opowi(
    g: &StateSpaceModel,
    w: Option<&StateSpaceModel>,
    data: &InterpolationData,
) -> Result<ReductionResult> {
    require_rhp(data)?;
    let fwout = fw_output_data(g, w)?;
    let frame = output_krylov(&fwout, data)?;

    let q_s = &frame.small_gramian;
    let chol = Cholesky::new(q_s.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("Q_s".into()))?;
    // a_r = -q_s s^T q_s^-1, computed as the solution of x q_s = -q_s s^T
    let a_r = chol
        .solve(&(&frame.s * q_s))
        .transpose()
        .map(|x| -x);
    let w_r = frame.reduced_block();
    let b_r = w_r.transpose() * g.b();
    // c_r = -l_o^T q_s^-1
    let c_r = chol.solve(&frame.l.clone()).transpose().map(|x| -x);
    let rom = StateSpaceModel::new(a_r, b_r, c_r, g.d().clone())?;

    let factor = &w_r * inverse_cholesky_factor(q_s)?;
    let rom_poles = rom.eigenvalues()?;

    let mut diagnostics = BTreeMap::new();
    let a_o = fwout.ho.a();
    let sylv_res = (frame.basis.transpose() * a_o - &frame.s * frame.basis.transpose()
        - &frame.l * &fwout.c_g)
        .norm()
        / (a_o.norm() * frame.basis.norm()).max(1.0);
    diagnostics.insert("sylvester_identity_rel".into(), sylv_res);
    let roms = rom_output_gramians(g, &rom, &fwout)?;
    let opt = &roms.qe_rom * rom.b() - roms.qhat_12.transpose() * g.b();
    let scale = (roms.qhat_12.transpose() * g.b()).norm().max(f64::MIN_POSITIVE);
    diagnostics.insert("pseudo_optimality_abs".into(), opt.norm());
    diagnostics.insert("pseudo_optimality_rel".into(), opt.norm() / scale);
    diagnostics.insert(
        "pole_placement_rel".into(),
        pole_placement_error(&rom_poles, data),
    );

    Ok(ReductionResult {
        rom,
        frame: Some(frame),
        rom_poles,
        approx_gramian_factor: Some(factor),
        diagnostics,
        iterations: 1,
    })
}

/// Greatest relative mismatch between reduced poles and negated shifts.
fn pole_placement_error(poles: &[Complex64], data: &InterpolationData) -> f64 {
    let mut sorted_poles: Vec<Complex64> = poles.to_vec();
    sorted_poles.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).expect("finite"));
    let mut mirrors: Vec<Complex64> = data.shifts().iter().map(|s| -s).collect();
    mirrors.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).expect("finite"));
    sorted_poles
        .iter()
        .zip(&mirrors)
        .map(|(p, m)| (p - m).norm() / m.norm().max(1.0))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn plant() -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_row_slice(3, 3, &[-1.0, 0.5, 0.0, -0.5, -2.0, 0.3, 0.0, -0.3, -3.0]),
            DMatrix::from_column_slice(3, 1, &[1.0, 0.4, -0.2]),
            DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.7]),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    fn weight() -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_element(1, 1, -2.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.5),
        )
        .unwrap()
    }

    fn real_data(shifts: &[f64]) -> InterpolationData {
        InterpolationData::with_both(
            shifts.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
            shifts
                .iter()
                .map(|_| DVector::from_element(1, Complex64::new(1.0, 0.0)))
                .collect(),
            shifts
                .iter()
                .map(|_| DVector::from_element(1, Complex64::new(1.0, 0.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn poles_are_negated_shifts() {
        let res = ipowi(&plant(), Some(&weight()), &real_data(&[1.0, 2.0])).unwrap();
        let mut re: Vec<f64> = res.rom_poles.iter().map(|l| l.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 2.0).abs() < 1e-9);
        assert!((re[1] + 1.0).abs() < 1e-9);
        assert!(res.diagnostics["pseudo_optimality_rel"] < 1e-8);
        assert!(res.diagnostics["sylvester_identity_rel"] < 1e-8);
    }

    #[test]
    fn opowi_dual_of_ipowi() {
        let g = plant();
        let w = weight();
        let data = real_data(&[1.3]);
        let res_o = opowi(&g, Some(&w), &data).unwrap();
        let res_dual = ipowi(&g.transpose(), Some(&w.transpose()), &data).unwrap();
        // transfer functions of the dual pair are transposes of each other
        for s in [Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.5)] {
            let a = res_o.rom.evaluate(s).unwrap();
            let b = res_dual.rom.evaluate(s).unwrap().transpose();
            assert!((a - b).norm() < 1e-9);
        }
        assert!(res_o.diagnostics["pseudo_optimality_rel"] < 1e-8);
    }

    #[test]
    fn unweighted_single_shift_basis_direction() {
        // with an identity weight the basis column is the plain shifted solve
        let g = plant();
        let fwin = fw_input_data(&g, None).unwrap();
        let data = real_data(&[1.5]);
        let frame = input_krylov(&fwin, &data).unwrap();
        let mut pencil = -g.a().clone();
        for i in 0..3 {
            pencil[(i, i)] += 1.5;
        }
        let x = pencil.lu().solve(g.b()).unwrap();
        let q = frame.basis.column(0);
        let cosine = q.dot(&x.column(0)) / x.norm();
        assert!((cosine.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conjugate_pair_spectrum_of_s() {
        let g = plant();
        let data = InterpolationData::with_right(
            vec![Complex64::new(1.0, 2.0)],
            vec![DVector::from_element(1, Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let res = ipowi(&g, Some(&weight()), &data).unwrap();
        let frame = res.frame.as_ref().unwrap();
        let mut eigs = crate::linalg::system_eigenvalues(&frame.s).unwrap();
        eigs.sort_by(|x, y| (x.im).partial_cmp(&y.im).unwrap());
        assert!((eigs[0] - Complex64::new(1.0, -2.0)).norm() < 1e-9);
        assert!((eigs[1] - Complex64::new(1.0, 2.0)).norm() < 1e-9);
        // rom poles mirror the shifts
        assert!(res.diagnostics["pole_placement_rel"] < 1e-9);
    }

    #[test]
    fn left_half_plane_shift_rejected() {
        let data = InterpolationData::with_right(
            vec![Complex64::new(-1.0, 0.0)],
            vec![DVector::from_element(1, Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        assert!(matches!(
            ipowi(&plant(), Some(&weight()), &data),
            Err(Error::UnstableShift(_))
        ));
    }
}
