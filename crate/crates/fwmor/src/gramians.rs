//! Standard and frequency-weighted Gramians.
//!
//! The weighted quantities are computed from the decoupled small equations
//! (weight Gramian, cross-Gramian Sylvester, plant-block Lyapunov) rather
//! than one large augmented Lyapunov equation; the augmented route is kept
//! as a test oracle only.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{self, hstack, vstack};
use crate::sys::{augment_input, augment_output, StateSpaceModel};

/// Controllability and observability Gramians of a stable system.
pub fn standard_gramians(g: &StateSpaceModel) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let p = linalg::solve_lyapunov(g.a(), &(g.b() * g.b().transpose()))?;
    let q = linalg::solve_lyapunov(&g.a().transpose(), &(g.c().transpose() * g.c()))?;
    Ok((p, q))
}

/// Input-side frequency-weighted data: the augmented realization of
/// `G(s) V(s)` together with the weight Gramian `P_v`, the cross block
/// `P_12`, the weighted controllability Gramian `P_e`, the stacked feed
/// matrix `B_F`, and the auxiliary blocks `B_1`, `B_2`.
#[derive(Debug, Clone)]
pub struct FWInputData {
    pub hi: StateSpaceModel,
    pub weight: StateSpaceModel,
    pub p_v: DMatrix<f64>,
    pub p_12: DMatrix<f64>,
    pub p_e: DMatrix<f64>,
    pub b_f: DMatrix<f64>,
    pub b_1: DMatrix<f64>,
    pub b_2: DMatrix<f64>,
}

/// Output-side dual of [`FWInputData`] for `W(s) G(s)`.
#[derive(Debug, Clone)]
pub struct FWOutputData {
    pub ho: StateSpaceModel,
    pub weight: StateSpaceModel,
    pub q_w: DMatrix<f64>,
    pub q_12: DMatrix<f64>,
    pub q_e: DMatrix<f64>,
    pub c_g: DMatrix<f64>,
    pub c_1: DMatrix<f64>,
    pub c_2: DMatrix<f64>,
}

fn check_psd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() == 0 {
        return Ok(());
    }
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.max().max(0.0);
    let min = eig.eigenvalues.min();
    // indefiniteness signals instability upstream and must not be masked
    if min < -1e-10 * max.max(1.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "{name} has eigenvalue {min:.3e} (largest {max:.3e})"
        )));
    }
    Ok(())
}

fn require_stable(sys: &StateSpaceModel) -> Result<()> {
    let report = sys.validate()?;
    if !report.is_stable {
        return Err(Error::UnstableSystem(report.spectral_abscissa));
    }
    Ok(())
}

fn sym(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    m += t;
    m *= 0.5;
    m
}

/// Assemble the input-side weighted data for plant `g` and weight `v`
/// (`None` means the identity weight, which reproduces the standard
/// controllability Gramian).
pub fn fw_input_data(g: &StateSpaceModel, v: Option<&StateSpaceModel>) -> Result<FWInputData> {
    let m = g.n_inputs();
    let v = match v {
        Some(v) => v.clone(),
        None => StateSpaceModel::identity_weight(m),
    };
    require_stable(g)?;
    require_stable(&v)?;

    let p_v = sym(linalg::solve_lyapunov(v.a(), &(v.b() * v.b().transpose()))?);
    check_psd("P_v", &p_v)?;
    let feed = g.b() * (v.c() * &p_v + v.d() * v.b().transpose());
    let p_12 = linalg::solve_sylvester(g.a(), &v.a().transpose(), &feed)?;

    let p12_cvt = &p_12 * v.c().transpose();
    let b_dv = g.b() * v.d();
    let b_1 = hstack(&[g.b(), &p12_cvt, &b_dv]);
    let b_2 = hstack(&[&p12_cvt, g.b(), &b_dv]);
    let p_e = sym(linalg::solve_lyapunov(g.a(), &(&b_1 * b_2.transpose()))?);
    check_psd("P_e", &p_e)?;

    let b_f = vstack(&[
        &(&p12_cvt + g.b() * v.d() * v.d().transpose()),
        &(&p_v * v.c().transpose() + v.b() * v.d().transpose()),
    ]);
    let hi = augment_input(g, &v)?;
    Ok(FWInputData {
        hi,
        weight: v,
        p_v,
        p_12,
        p_e,
        b_f,
        b_1,
        b_2,
    })
}

/// Assemble the output-side weighted data for plant `g` and weight `w`.
pub fn fw_output_data(g: &StateSpaceModel, w: Option<&StateSpaceModel>) -> Result<FWOutputData> {
    let p = g.n_outputs();
    let w = match w {
        Some(w) => w.clone(),
        None => StateSpaceModel::identity_weight(p),
    };
    require_stable(g)?;
    require_stable(&w)?;

    let q_w = sym(linalg::solve_lyapunov(
        &w.a().transpose(),
        &(w.c().transpose() * w.c()),
    )?);
    check_psd("Q_w", &q_w)?;
    let feed = g.c().transpose() * (w.b().transpose() * &q_w + w.d().transpose() * w.c());
    let q_12 = linalg::solve_sylvester(&g.a().transpose(), w.a(), &feed)?;

    let bwt_q12t = w.b().transpose() * q_12.transpose();
    let dw_c = w.d() * g.c();
    let c_1 = vstack(&[g.c(), &bwt_q12t, &dw_c]);
    let c_2 = vstack(&[&bwt_q12t, g.c(), &dw_c]);
    let q_e = sym(linalg::solve_lyapunov(
        &g.a().transpose(),
        &(c_1.transpose() * &c_2),
    )?);
    check_psd("Q_e", &q_e)?;

    let c_g = hstack(&[
        &(&bwt_q12t + w.d().transpose() * w.d() * g.c()),
        &(w.b().transpose() * &q_w + w.d().transpose() * w.c()),
    ]);
    let ho = augment_output(&w, g)?;
    Ok(FWOutputData {
        ho,
        weight: w,
        q_w,
        q_12,
        q_e,
        c_g,
        c_1,
        c_2,
    })
}

/// Weighted Gramian blocks coupling a reduced model to the plant and the
/// input weight.
#[derive(Debug, Clone)]
pub struct RomInputGramians {
    /// Cross block between ROM and weight states (r x n_v).
    pub p12_rom: DMatrix<f64>,
    /// Weighted controllability Gramian of the ROM (r x r).
    pub pe_rom: DMatrix<f64>,
    /// Cross block between plant and ROM states (n x r).
    pub phat_12: DMatrix<f64>,
    /// B_2 analogue built from ROM data (r x 3m).
    pub b2_rom: DMatrix<f64>,
    /// Stacked feed matrix of the reduced augmented system.
    pub bf_rom: DMatrix<f64>,
}

/// Output-side dual of [`RomInputGramians`].
#[derive(Debug, Clone)]
pub struct RomOutputGramians {
    pub q12_rom: DMatrix<f64>,
    pub qe_rom: DMatrix<f64>,
    pub qhat_12: DMatrix<f64>,
    pub c2_rom: DMatrix<f64>,
    pub cg_rom: DMatrix<f64>,
}

/// Solve the ROM-coupled input-side equations for a reduced model `gr`.
pub fn rom_input_gramians(
    g: &StateSpaceModel,
    gr: &StateSpaceModel,
    fwin: &FWInputData,
) -> Result<RomInputGramians> {
    let v = &fwin.weight;
    let feed = gr.b() * (v.c() * &fwin.p_v + v.d() * v.b().transpose());
    let p12_rom = linalg::solve_sylvester(gr.a(), &v.a().transpose(), &feed)?;

    let p12r_cvt = &p12_rom * v.c().transpose();
    let br_dv = gr.b() * v.d();
    let b1_rom = hstack(&[gr.b(), &p12r_cvt, &br_dv]);
    let b2_rom = hstack(&[&p12r_cvt, gr.b(), &br_dv]);
    let pe_rom = sym(linalg::solve_lyapunov(
        gr.a(),
        &(&b1_rom * b2_rom.transpose()),
    )?);
    let phat_12 = linalg::solve_sylvester(
        g.a(),
        &gr.a().transpose(),
        &(&fwin.b_1 * b2_rom.transpose()),
    )?;
    let bf_rom = vstack(&[
        &(&p12r_cvt + gr.b() * v.d() * v.d().transpose()),
        &(&fwin.p_v * v.c().transpose() + v.b() * v.d().transpose()),
    ]);
    Ok(RomInputGramians {
        p12_rom,
        pe_rom,
        phat_12,
        b2_rom,
        bf_rom,
    })
}

/// Solve the ROM-coupled output-side equations for a reduced model `gr`.
pub fn rom_output_gramians(
    g: &StateSpaceModel,
    gr: &StateSpaceModel,
    fwout: &FWOutputData,
) -> Result<RomOutputGramians> {
    let w = &fwout.weight;
    let feed = gr.c().transpose() * (w.b().transpose() * &fwout.q_w + w.d().transpose() * w.c());
    let q12_rom = linalg::solve_sylvester(&gr.a().transpose(), w.a(), &feed)?;

    let bwt_q12rt = w.b().transpose() * q12_rom.transpose();
    let dw_cr = w.d() * gr.c();
    let c1_rom = vstack(&[gr.c(), &bwt_q12rt, &dw_cr]);
    let c2_rom = vstack(&[&bwt_q12rt, gr.c(), &dw_cr]);
    let qe_rom = sym(linalg::solve_lyapunov(
        &gr.a().transpose(),
        &(c1_rom.transpose() * &c2_rom),
    )?);
    let qhat_12 = linalg::solve_sylvester(
        &g.a().transpose(),
        gr.a(),
        &(fwout.c_1.transpose() * &c2_rom),
    )?;
    let cg_rom = hstack(&[
        &(&bwt_q12rt + w.d().transpose() * w.d() * gr.c()),
        &(w.b().transpose() * &fwout.q_w + w.d().transpose() * w.c()),
    ]);
    Ok(RomOutputGramians {
        q12_rom,
        qe_rom,
        qhat_12,
        c2_rom,
        cg_rom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn first_order_gramians() {
        let g = first_order();
        let (p, q) = standard_gramians(&g).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((q[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn decoupled_two_state_gramian() {
        let g = StateSpaceModel::new(
            DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let (p, _) = standard_gramians(&g).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((p[(1, 1)] - 0.25).abs() < 1e-14);
        assert!((p[(0, 1)] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn identity_weight_degenerates_to_standard_gramian() {
        let g = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -2.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let fwin = fw_input_data(&g, None).unwrap();
        let fwout = fw_output_data(&g, None).unwrap();
        let (p, q) = standard_gramians(&g).unwrap();
        assert!((&fwin.p_e - &p).norm() < 1e-12);
        assert!((&fwout.q_e - &q).norm() < 1e-12);
        assert_eq!(fwin.p_12.ncols(), 0);
        // the feed matrix collapses to B
        assert!((&fwin.b_f - g.b()).norm() < 1e-14);
    }

    #[test]
    fn rom_equal_to_plant_reproduces_pe() {
        let g = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[-2.0, 0.3, -0.1, -1.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.5]),
            DMatrix::from_row_slice(1, 2, &[0.4, 1.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let v = StateSpaceModel::new(
            DMatrix::from_element(1, 1, -3.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.5),
            DMatrix::from_element(1, 1, 0.2),
        )
        .unwrap();
        let fwin = fw_input_data(&g, Some(&v)).unwrap();
        let roms = rom_input_gramians(&g, &g, &fwin).unwrap();
        assert!((&roms.phat_12 - &fwin.p_e).norm() < 1e-10);
        assert!((&roms.pe_rom - &fwin.p_e).norm() < 1e-10);
        let fwout = fw_output_data(&g, None).unwrap();
        let romsq = rom_output_gramians(&g, &g, &fwout).unwrap();
        assert!((&romsq.qhat_12 - &fwout.q_e).norm() < 1e-10);
    }

    #[test]
    fn output_data_is_dual_of_input_data() {
        let g = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[-1.5, 0.2, 0.4, -2.5]),
            DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.3, 1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, -0.2, 0.0, 1.0]),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let w = StateSpaceModel::new(
            DMatrix::from_element(1, 1, -2.0) * DMatrix::identity(1, 1),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.4]),
            DMatrix::from_column_slice(2, 1, &[0.8, -0.3]),
            DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.2, 0.3]),
        )
        .unwrap();
        let fwout = fw_output_data(&g, Some(&w)).unwrap();
        let fwin_dual = fw_input_data(&g.transpose(), Some(&w.transpose())).unwrap();
        assert!((&fwout.q_e - &fwin_dual.p_e).norm() < 1e-10);
        assert!((&fwout.q_w - &fwin_dual.p_v).norm() < 1e-10);
        assert!((&fwout.q_12 - &fwin_dual.p_12).norm() < 1e-10);
        assert!((&fwout.c_g - fwin_dual.b_f.transpose()).norm() < 1e-10);
    }
}
