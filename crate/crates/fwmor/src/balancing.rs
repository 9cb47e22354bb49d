//! Frequency-weighted balanced truncation and its approximate variant.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gramians::{fw_input_data, fw_output_data};
use crate::linalg::contragradient_balance;
use crate::sys::StateSpaceModel;

/// Result of a balance-and-truncate reduction.
#[derive(Debug, Clone)]
pub struct BalancingResult {
    pub rom: StateSpaceModel,
    /// Balancing transformation (full order; identity-sized for the factor
    /// variant where no full transformation exists).
    pub t: Option<DMatrix<f64>>,
    /// Frequency-weighted Hankel singular values, descending.
    pub sigma_bar: Vec<f64>,
    pub kept: usize,
    /// Whether the truncated model is Hurwitz. Two-sided weighting carries
    /// no stability guarantee; the flag reports, never repairs.
    pub rom_stable: bool,
    pub warnings: Vec<String>,
}

/// Relative tie tolerance at the truncation boundary.
const TIE_TOL: f64 = 1e-10;

/// Enns' frequency-weighted balanced truncation.
///
/// Computes the weighted Gramians (standard ones when a weight is absent),
/// balances them with a contragradient transformation, and keeps the leading
/// `r` states.
pub fn fwbt(
    g: &StateSpaceModel,
    v: Option<&StateSpaceModel>,
    w: Option<&StateSpaceModel>,
    r: usize,
) -> Result<BalancingResult> {
    let n = g.order();
    if r == 0 || r > n {
        return Err(Error::OrderOutOfRange { r, n });
    }
    let p_e = fw_input_data(g, v)?.p_e;
    let q_e = fw_output_data(g, w)?.q_e;
    let (t, sigma_bar) = contragradient_balance(&p_e, &q_e)?;

    let mut warnings = Vec::new();
    if r < n {
        let (hi, lo) = (sigma_bar[r - 1], sigma_bar[r]);
        if (hi - lo).abs() <= TIE_TOL * hi.max(f64::MIN_POSITIVE) {
            warnings.push(format!(
                "truncation boundary tie: sigma_{r} = sigma_{} = {hi:.6e}; keeping the earlier index",
                r + 1
            ));
        }
    }

    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("balancing transformation singular".into()))?;
    let v_r = t.columns(0, r).clone_owned();
    let w_r = t_inv.transpose().columns(0, r).clone_owned();
    let rom = StateSpaceModel::new(
        w_r.transpose() * g.a() * &v_r,
        w_r.transpose() * g.b(),
        g.c() * &v_r,
        g.d().clone(),
    )?;
    let rom_stable = rom.validate()?.is_stable;
    if !rom_stable {
        warnings.push("truncated model is unstable (two-sided weighted truncation has no stability guarantee)".into());
    }
    Ok(BalancingResult {
        rom,
        t: Some(t),
        sigma_bar,
        kept: r,
        rom_stable,
        warnings,
    })
}

/// Balanced truncation driven by low-rank Gramian factors
/// `P_e ~ F_p F_p^T`, `Q_e ~ F_q F_q^T` (for instance the approximate
/// factors produced by the single-shot weighted interpolation reducers).
///
/// Balancing is restricted to the intersection of the factor ranges via an
/// SVD of the crossed factors; the large weighted Lyapunov equations are
/// never solved.
pub fn approx_fwbt(
    g: &StateSpaceModel,
    p_factor: &DMatrix<f64>,
    q_factor: &DMatrix<f64>,
    r: usize,
) -> Result<BalancingResult> {
    let n = g.order();
    if p_factor.nrows() != n || q_factor.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "gramian factors must have {n} rows"
        )));
    }
    if r == 0 || r > p_factor.ncols().min(q_factor.ncols()) {
        return Err(Error::OrderOutOfRange {
            r,
            n: p_factor.ncols().min(q_factor.ncols()),
        });
    }

    let cross = q_factor.transpose() * p_factor;
    let svd = cross.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > 1e-10 * smax.max(f64::MIN_POSITIVE)).count();
    if rank < r {
        return Err(Error::RankDeficientFactors { rank, r });
    }
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");

    let mut warnings = Vec::new();
    if r < rank {
        let (hi, lo) = (sv[r - 1], sv[r]);
        if (hi - lo).abs() <= TIE_TOL * hi.max(f64::MIN_POSITIVE) {
            warnings.push(format!(
                "truncation boundary tie: sigma_{r} = sigma_{} = {hi:.6e}; keeping the earlier index",
                r + 1
            ));
        }
    }

    let mut v_r = p_factor * vt.rows(0, r).transpose();
    let mut w_r = q_factor * u.columns(0, r);
    for k in 0..r {
        let scale = sv[k].sqrt().recip();
        v_r.column_mut(k).scale_mut(scale);
        w_r.column_mut(k).scale_mut(scale);
    }
    let rom = StateSpaceModel::new(
        w_r.transpose() * g.a() * &v_r,
        w_r.transpose() * g.b(),
        g.c() * &v_r,
        g.d().clone(),
    )?;
    let rom_stable = rom.validate()?.is_stable;
    if !rom_stable {
        warnings.push("truncated model is unstable (two-sided weighted truncation has no stability guarantee)".into());
    }
    Ok(BalancingResult {
        rom,
        t: None,
        sigma_bar: sv.iter().take(rank).copied().collect(),
        kept: r,
        rom_stable,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn two_state() -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn full_order_bt_preserves_transfer() {
        let g = two_state();
        let res = fwbt(&g, None, None, 2).unwrap();
        for s in [Complex64::new(0.0, 0.5), Complex64::new(1.0, 1.0)] {
            let d = (res.rom.evaluate(s).unwrap() - g.evaluate(s).unwrap()).norm();
            assert!(d < 1e-10, "transfer deviation {d}");
        }
        // similarity transform: eigenvalues preserved
        let mut eigs: Vec<f64> = res.rom.eigenvalues().unwrap().iter().map(|l| l.re).collect();
        eigs.sort_by(f64::total_cmp);
        assert!((eigs[0] + 2.0).abs() < 1e-10 && (eigs[1] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn unweighted_bt_matches_hand_computation() {
        // sigma_bar are sqrt(eig(PQ)); for this SISO system P = Q
        let g = two_state();
        let res = fwbt(&g, None, None, 1).unwrap();
        let (p, q) = crate::gramians::standard_gramians(&g).unwrap();
        let pq = &p * &q;
        let eigs = crate::linalg::system_eigenvalues(&pq).unwrap();
        let mut expected: Vec<f64> = eigs.iter().map(|l| l.re.max(0.0).sqrt()).collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        assert!((res.sigma_bar[0] - expected[0]).abs() < 1e-10);
        assert!((res.sigma_bar[1] - expected[1]).abs() < 1e-10);
        assert_eq!(res.kept, 1);
        assert!(res.rom_stable);
    }

    #[test]
    fn exact_factors_reproduce_fwbt() {
        let g = StateSpaceModel::new(
            DMatrix::from_row_slice(3, 3, &[-1.0, 0.2, 0.0, -0.2, -2.0, 0.4, 0.1, 0.0, -3.0]),
            DMatrix::from_column_slice(3, 1, &[1.0, 0.5, -0.3]),
            DMatrix::from_row_slice(1, 3, &[1.0, -0.4, 0.8]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let full = fwbt(&g, None, None, 2).unwrap();
        let pe = fw_input_data(&g, None).unwrap().p_e;
        let qe = fw_output_data(&g, None).unwrap().q_e;
        let fp = nalgebra::Cholesky::new(pe).unwrap().l();
        let fq = nalgebra::Cholesky::new(qe).unwrap().l();
        let approx = approx_fwbt(&g, &fp, &fq, 2).unwrap();
        for s in [Complex64::new(0.0, 0.3), Complex64::new(1.0, 2.0), Complex64::new(10.0, 0.0)] {
            let d = (approx.rom.evaluate(s).unwrap() - full.rom.evaluate(s).unwrap()).norm();
            assert!(d < 1e-8, "transfer deviation {d}");
        }
    }

    #[test]
    fn rank_deficient_factors_detected() {
        let g = two_state();
        // duplicated column: rank 1 factor
        let f = DMatrix::from_column_slice(2, 2, &[1.0, 0.5, 1.0, 0.5]);
        assert!(matches!(
            approx_fwbt(&g, &f, &f, 2),
            Err(Error::RankDeficientFactors { rank: 1, r: 2 })
        ));
    }

    #[test]
    fn order_bounds_enforced() {
        let g = two_state();
        assert!(matches!(
            fwbt(&g, None, None, 3),
            Err(Error::OrderOutOfRange { .. })
        ));
        assert!(matches!(
            fwbt(&g, None, None, 0),
            Err(Error::OrderOutOfRange { .. })
        ));
    }
}
