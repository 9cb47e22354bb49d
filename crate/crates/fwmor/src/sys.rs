//! State-space system algebra.
//!
//! A [`StateSpaceModel`] is a realization (A, B, C, D) of a real rational
//! transfer matrix; the order-zero case encodes a static gain. The module
//! owns weighted (series) realizations, transfer evaluation, pole-residue
//! decompositions, and the dominant-pole choice of interpolation data.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, hstack, to_complex, vstack};

/// A realization (A, B, C, D) of a continuous-time LTI system.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

/// Stability summary produced by [`StateSpaceModel::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub is_stable: bool,
    /// Largest real part over the spectrum of A; `-inf` for static gains.
    pub spectral_abscissa: f64,
}

impl StateSpaceModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "B has {} rows, expected {n}",
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "C has {} columns, expected {n}",
                c.ncols()
            )));
        }
        if d.shape() != (c.nrows(), b.ncols()) {
            return Err(Error::DimensionMismatch(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            linalg::ensure_finite(name, m)?;
        }
        Ok(Self { a, b, c, d })
    }

    /// Static gain `G(s) = D` (order zero).
    pub fn static_gain(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
        }
    }

    /// The k x k identity weight as a static gain.
    pub fn identity_weight(k: usize) -> Self {
        Self::static_gain(DMatrix::identity(k, k))
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// The dual realization (A^T, C^T, B^T, D^T).
    pub fn transpose(&self) -> Self {
        Self {
            a: self.a.transpose(),
            b: self.c.transpose(),
            c: self.b.transpose(),
            d: self.d.transpose(),
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        crate::linalg::system_eigenvalues(&self.a)
    }

    /// Stability report: stable iff the spectral abscissa is negative.
    pub fn validate(&self) -> Result<StabilityReport> {
        if self.order() == 0 {
            return Ok(StabilityReport {
                is_stable: true,
                spectral_abscissa: f64::NEG_INFINITY,
            });
        }
        let abscissa = self
            .eigenvalues()?
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(StabilityReport {
            is_stable: abscissa < 0.0,
            spectral_abscissa: abscissa,
        })
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.validate()?.is_stable)
    }

    /// Transfer matrix `C (sI - A)^-1 B + D` via one linear solve.
    pub fn evaluate(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.order();
        if n == 0 {
            return Ok(to_complex(&self.d));
        }
        let mut pencil = to_complex(&self.a).map(|z| -z);
        for i in 0..n {
            pencil[(i, i)] += s;
        }
        let x = linalg::complex_solve(&pencil, &to_complex(&self.b), "transfer evaluation")?;
        Ok(to_complex(&self.c) * x + to_complex(&self.d))
    }
}

/// A plant together with optional input/output frequency weights.
///
/// Absent weights mean identity. Square weight dimensions are enforced
/// against the plant's input and output counts.
#[derive(Debug, Clone)]
pub struct WeightedProblem {
    pub plant: StateSpaceModel,
    pub input_weight: Option<StateSpaceModel>,
    pub output_weight: Option<StateSpaceModel>,
}

impl WeightedProblem {
    pub fn new(
        plant: StateSpaceModel,
        input_weight: Option<StateSpaceModel>,
        output_weight: Option<StateSpaceModel>,
    ) -> Result<Self> {
        if let Some(v) = &input_weight {
            if v.n_inputs() != plant.n_inputs() || v.n_outputs() != plant.n_inputs() {
                return Err(Error::DimensionMismatch(format!(
                    "input weight must be {m}x{m}, got {}x{}",
                    v.n_outputs(),
                    v.n_inputs(),
                    m = plant.n_inputs()
                )));
            }
        }
        if let Some(w) = &output_weight {
            if w.n_inputs() != plant.n_outputs() || w.n_outputs() != plant.n_outputs() {
                return Err(Error::DimensionMismatch(format!(
                    "output weight must be {p}x{p}, got {}x{}",
                    w.n_outputs(),
                    w.n_inputs(),
                    p = plant.n_outputs()
                )));
            }
        }
        for (name, sys) in [("plant", Some(&plant)), ("input weight", input_weight.as_ref()), ("output weight", output_weight.as_ref())]
        {
            if let Some(sys) = sys {
                let report = sys.validate()?;
                if !report.is_stable {
                    return Err(Error::UnstableSystem(report.spectral_abscissa));
                }
                let _ = name;
            }
        }
        Ok(Self {
            plant,
            input_weight,
            output_weight,
        })
    }
}

/// Series realization of `G(s) V(s)` (input-augmented system).
pub fn augment_input(g: &StateSpaceModel, v: &StateSpaceModel) -> Result<StateSpaceModel> {
    let m = g.n_inputs();
    if v.n_inputs() != m || v.n_outputs() != m {
        return Err(Error::DimensionMismatch(format!(
            "input weight must be {m}x{m}, got {}x{}",
            v.n_outputs(),
            v.n_inputs()
        )));
    }
    let (n, nv) = (g.order(), v.order());
    let a = vstack(&[
        &hstack(&[g.a(), &(g.b() * v.c())]),
        &hstack(&[&DMatrix::zeros(nv, n), v.a()]),
    ]);
    let b = vstack(&[&(g.b() * v.d()), v.b()]);
    let c = hstack(&[g.c(), &(g.d() * v.c())]);
    let d = g.d() * v.d();
    StateSpaceModel::new(a, b, c, d)
}

/// Series realization of `W(s) G(s)` (output-augmented system).
pub fn augment_output(w: &StateSpaceModel, g: &StateSpaceModel) -> Result<StateSpaceModel> {
    let p = g.n_outputs();
    if w.n_inputs() != p || w.n_outputs() != p {
        return Err(Error::DimensionMismatch(format!(
            "output weight must be {p}x{p}, got {}x{}",
            w.n_outputs(),
            w.n_inputs()
        )));
    }
    let (n, nw) = (g.order(), w.order());
    let a = vstack(&[
        &hstack(&[g.a(), &DMatrix::zeros(n, nw)]),
        &hstack(&[&(w.b() * g.c()), w.a()]),
    ]);
    let b = vstack(&[g.b(), &(w.b() * g.d())]);
    let c = hstack(&[&(w.d() * g.c()), w.c()]);
    let d = w.d() * g.d();
    StateSpaceModel::new(a, b, c, d)
}

/// Block-diagonal realization of the difference `G(s) - Gr(s)`.
pub fn subtract(g: &StateSpaceModel, gr: &StateSpaceModel) -> Result<StateSpaceModel> {
    if g.n_inputs() != gr.n_inputs() || g.n_outputs() != gr.n_outputs() {
        return Err(Error::DimensionMismatch(
            "subtraction needs matching input/output counts".into(),
        ));
    }
    let (n, r) = (g.order(), gr.order());
    let a = vstack(&[
        &hstack(&[g.a(), &DMatrix::zeros(n, r)]),
        &hstack(&[&DMatrix::zeros(r, n), gr.a()]),
    ]);
    let b = vstack(&[g.b(), gr.b()]);
    let c = hstack(&[g.c(), &(-gr.c())]);
    let d = g.d() - gr.d();
    StateSpaceModel::new(a, b, c, d)
}

/// Realization of `W (G - Gr) V` with the feedthrough forced to exact zero.
///
/// The composed feedthrough `Dw (D - Dr) Dv` must vanish (to roundoff);
/// otherwise the weighted H2 error is unbounded and `ImproperError` is
/// raised.
pub fn weighted_error_system(
    g: &StateSpaceModel,
    gr: &StateSpaceModel,
    v: Option<&StateSpaceModel>,
    w: Option<&StateSpaceModel>,
) -> Result<StateSpaceModel> {
    let diff = subtract(g, gr)?;
    let staged = match v {
        Some(v) => augment_input(&diff, v)?,
        None => diff,
    };
    let mut full = match w {
        Some(w) => augment_output(w, &staged)?,
        None => staged,
    };
    let scale = 1.0 + g.d().amax().max(gr.d().amax());
    let feed = full.d.amax();
    if feed > 1e-10 * scale {
        return Err(Error::ImproperError(format!(
            "weighted error feedthrough has magnitude {feed:.3e}"
        )));
    }
    full.d.fill(0.0);
    Ok(full)
}

/// Poles with right/left residue directions:
/// `G(s) = sum_i c_i b_i^T / (s - lambda_i) + D`.
#[derive(Debug, Clone)]
pub struct PoleResidueForm {
    pub poles: Vec<Complex64>,
    /// Right residue directions b_i (length = input count).
    pub right: Vec<DVector<Complex64>>,
    /// Left residue directions c_i (length = output count).
    pub left: Vec<DVector<Complex64>>,
    pub feedthrough: DMatrix<f64>,
}

impl PoleResidueForm {
    pub fn transfer_at(&self, s: Complex64) -> DMatrix<Complex64> {
        let mut g = to_complex(&self.feedthrough);
        for ((lambda, c), b) in self.poles.iter().zip(&self.left).zip(&self.right) {
            let scale = (s - lambda).inv();
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    g[(i, j)] += scale * c[i] * b[j];
                }
            }
        }
        g
    }

    /// A real realization with 1x1 blocks for real poles and 2x2 rotation
    /// blocks for conjugate pairs. Requires conjugate-closed data.
    pub fn realize(&self) -> Result<StateSpaceModel> {
        let r = self.poles.len();
        let (p, m) = self.feedthrough.shape();
        let mut a = DMatrix::zeros(r, r);
        let mut b = DMatrix::zeros(r, m);
        let mut c = DMatrix::zeros(p, r);
        let mut i = 0;
        let mut slot = 0;
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&x, &y| {
            (self.poles[x].re, self.poles[x].im)
                .partial_cmp(&(self.poles[y].re, self.poles[y].im))
                .expect("finite poles")
        });
        while i < r {
            let k = order[i];
            let lambda = self.poles[k];
            if lambda.im.abs() < 1e-12 * (1.0 + lambda.re.abs()) {
                a[(slot, slot)] = lambda.re;
                for j in 0..m {
                    b[(slot, j)] = self.right[k][j].re;
                }
                for j in 0..p {
                    c[(j, slot)] = self.left[k][j].re;
                }
                i += 1;
                slot += 1;
            } else {
                // sorted (im < 0, im > 0); take the im > 0 member
                if i + 1 >= r {
                    return Err(Error::RepeatedPoles(
                        "pole set is not conjugate closed".into(),
                    ));
                }
                let kp = order[i + 1];
                if (self.poles[kp] - lambda.conj()).norm() > 1e-8 * (1.0 + lambda.norm()) {
                    return Err(Error::RepeatedPoles(
                        "pole set is not conjugate closed".into(),
                    ));
                }
                let (re, im) = (self.poles[kp].re, self.poles[kp].im);
                a[(slot, slot)] = re;
                a[(slot, slot + 1)] = im;
                a[(slot + 1, slot)] = -im;
                a[(slot + 1, slot + 1)] = re;
                for j in 0..m {
                    b[(slot, j)] = 2.0 * self.right[kp][j].re;
                    b[(slot + 1, j)] = -2.0 * self.right[kp][j].im;
                }
                for j in 0..p {
                    c[(j, slot)] = self.left[kp][j].re;
                    c[(j, slot + 1)] = self.left[kp][j].im;
                }
                i += 2;
                slot += 2;
            }
        }
        StateSpaceModel::new(a, b, c, self.feedthrough.clone())
    }
}

/// Relative gap below which two poles count as repeated.
const SIMPLE_POLE_TOL: f64 = 1e-8;

/// Pole-residue decomposition of a system with simple poles.
pub fn pole_residue(g: &StateSpaceModel) -> Result<PoleResidueForm> {
    let (eigs, r) = linalg::spectral_factorization(g.a())?;
    for i in 0..eigs.len() {
        for j in (i + 1)..eigs.len() {
            let gap = (eigs[i] - eigs[j]).norm();
            if gap <= SIMPLE_POLE_TOL * eigs[i].norm().max(eigs[j].norm()).max(1.0) {
                return Err(Error::RepeatedPoles(format!(
                    "poles {} and {} within relative gap {gap:.3e}",
                    eigs[i], eigs[j]
                )));
            }
        }
    }
    let bt = linalg::complex_solve(&r, &to_complex(g.b()), "residue computation")?;
    let cr = to_complex(g.c()) * &r;
    let right = (0..eigs.len())
        .map(|i| bt.row(i).transpose())
        .collect::<Vec<_>>();
    let left = (0..eigs.len()).map(|i| cr.column(i).clone_owned()).collect();
    Ok(PoleResidueForm {
        poles: eigs,
        right,
        left,
        feedthrough: g.d().clone(),
    })
}

/// One tangential interpolation point.
#[derive(Debug, Clone)]
pub struct InterpolationPoint {
    pub shift: Complex64,
    pub right: Option<DVector<Complex64>>,
    pub left: Option<DVector<Complex64>>,
}

/// Conjugate-closed interpolation data: shifts in the open right half-plane
/// with optional right/left tangential directions.
#[derive(Debug, Clone)]
pub struct InterpolationData {
    points: Vec<InterpolationPoint>,
    closure_added: usize,
}

fn is_real(z: Complex64) -> bool {
    z.im.abs() <= 1e-12 * (1.0 + z.re.abs())
}

impl InterpolationData {
    /// Build conjugate-closed data. Missing conjugate partners are added
    /// automatically (query [`InterpolationData::closure_added`]); a shift
    /// with a duplicate closer than 1e-10 relative spacing is rejected.
    pub fn new(mut points: Vec<InterpolationPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DimensionMismatch(
                "interpolation data must contain at least one shift".into(),
            ));
        }
        let dim_of = |p: &InterpolationPoint| {
            (
                p.right.as_ref().map(|d| d.len()),
                p.left.as_ref().map(|d| d.len()),
            )
        };
        let proto = dim_of(&points[0]);
        for p in &points {
            if dim_of(p) != proto {
                return Err(Error::DimensionMismatch(
                    "inconsistent tangential direction layout across shifts".into(),
                ));
            }
        }
        // realify near-real data, then close under conjugation
        let mut added = 0usize;
        for p in &mut points {
            if is_real(p.shift) {
                p.shift = Complex64::new(p.shift.re, 0.0);
                for d in [&mut p.right, &mut p.left].into_iter().flatten() {
                    let imag = d.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                    let scale = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    if imag > 1e-10 * (1.0 + scale) {
                        return Err(Error::DimensionMismatch(
                            "real shift carries a complex tangential direction".into(),
                        ));
                    }
                    *d = d.map(|z| Complex64::new(z.re, 0.0));
                }
            }
        }
        let mut closed: Vec<InterpolationPoint> = Vec::new();
        for p in &points {
            closed.push(p.clone());
        }
        for p in &points {
            if !is_real(p.shift) {
                let has_partner = points.iter().any(|q| {
                    (q.shift - p.shift.conj()).norm() <= 1e-10 * (1.0 + p.shift.norm())
                });
                if !has_partner {
                    closed.push(InterpolationPoint {
                        shift: p.shift.conj(),
                        right: p.right.as_ref().map(|d| d.map(|z| z.conj())),
                        left: p.left.as_ref().map(|d| d.map(|z| z.conj())),
                    });
                    added += 1;
                }
            }
        }
        closed.sort_by(|x, y| {
            (x.shift.re, x.shift.im)
                .partial_cmp(&(y.shift.re, y.shift.im))
                .expect("finite shifts")
        });
        for i in 0..closed.len() {
            for j in (i + 1)..closed.len() {
                let gap = (closed[i].shift - closed[j].shift).norm();
                if gap <= 1e-10 * (1.0 + closed[i].shift.norm()) {
                    return Err(Error::DuplicateShifts(format!(
                        "shifts {} and {} closer than tolerance",
                        closed[i].shift, closed[j].shift
                    )));
                }
            }
        }
        Ok(Self {
            points: closed,
            closure_added: added,
        })
    }

    /// Data with right directions only.
    pub fn with_right(shifts: Vec<Complex64>, dirs: Vec<DVector<Complex64>>) -> Result<Self> {
        if shifts.len() != dirs.len() {
            return Err(Error::DimensionMismatch(
                "one right direction per shift required".into(),
            ));
        }
        Self::new(
            shifts
                .into_iter()
                .zip(dirs)
                .map(|(shift, d)| InterpolationPoint {
                    shift,
                    right: Some(d),
                    left: None,
                })
                .collect(),
        )
    }

    /// Data with left directions only.
    pub fn with_left(shifts: Vec<Complex64>, dirs: Vec<DVector<Complex64>>) -> Result<Self> {
        if shifts.len() != dirs.len() {
            return Err(Error::DimensionMismatch(
                "one left direction per shift required".into(),
            ));
        }
        Self::new(
            shifts
                .into_iter()
                .zip(dirs)
                .map(|(shift, d)| InterpolationPoint {
                    shift,
                    right: None,
                    left: Some(d),
                })
                .collect(),
        )
    }

    /// Data with both direction families.
    pub fn with_both(
        shifts: Vec<Complex64>,
        right: Vec<DVector<Complex64>>,
        left: Vec<DVector<Complex64>>,
    ) -> Result<Self> {
        if shifts.len() != right.len() || shifts.len() != left.len() {
            return Err(Error::DimensionMismatch(
                "one right and one left direction per shift required".into(),
            ));
        }
        Self::new(
            shifts
                .into_iter()
                .zip(right.into_iter().zip(left))
                .map(|(shift, (r, l))| InterpolationPoint {
                    shift,
                    right: Some(r),
                    left: Some(l),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[InterpolationPoint] {
        &self.points
    }

    pub fn shifts(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.shift).collect()
    }

    pub fn has_right(&self) -> bool {
        self.points.iter().all(|p| p.right.is_some())
    }

    pub fn has_left(&self) -> bool {
        self.points.iter().all(|p| p.left.is_some())
    }

    /// How many conjugate partners the constructor had to add.
    pub fn closure_added(&self) -> usize {
        self.closure_added
    }

    /// Representatives for real-arithmetic basis construction: real shifts
    /// and the positive-imaginary member of each conjugate pair, ordered by
    /// (real part, |imaginary part|).
    pub fn representatives(&self) -> Vec<&InterpolationPoint> {
        let mut reps: Vec<&InterpolationPoint> = self
            .points
            .iter()
            .filter(|p| p.shift.im >= 0.0)
            .collect();
        reps.sort_by(|x, y| {
            (x.shift.re, x.shift.im.abs())
                .partial_cmp(&(y.shift.re, y.shift.im.abs()))
                .expect("finite shifts")
        });
        reps
    }

    pub fn all_in_open_rhp(&self) -> bool {
        self.points.iter().all(|p| p.shift.re > 0.0)
    }
}

/// Pick interpolation data from the `r` most dominant poles of `h`:
/// shifts are the mirror images `-lambda_i`, directions the residue
/// vectors. The dominance index is `||c_i|| ||b_i|| / |Re lambda_i|`; the
/// conjugate closure may grow the selection by one.
pub fn dominant_interpolation_data(h: &StateSpaceModel, r: usize) -> Result<InterpolationData> {
    if r == 0 || r > h.order() {
        return Err(Error::OrderOutOfRange { r, n: h.order() });
    }
    let report = h.validate()?;
    if !report.is_stable {
        return Err(Error::UnstableSystem(report.spectral_abscissa));
    }
    let form = pole_residue(h)?;
    let mut order: Vec<usize> = (0..form.poles.len()).collect();
    let index = |i: usize| {
        form.left[i].norm() * form.right[i].norm() / form.poles[i].re.abs().max(f64::MIN_POSITIVE)
    };
    order.sort_by(|&i, &j| {
        (index(j), form.poles[i].re, form.poles[i].im)
            .partial_cmp(&(index(i), form.poles[j].re, form.poles[j].im))
            .expect("finite dominance data")
    });

    let mut chosen: Vec<usize> = Vec::new();
    for &i in &order {
        if chosen.len() >= r {
            break;
        }
        if chosen.contains(&i) {
            continue;
        }
        chosen.push(i);
        if form.poles[i].im.abs() > 1e-12 * (1.0 + form.poles[i].re.abs()) {
            // bring the conjugate partner along
            if let Some(j) = (0..form.poles.len()).find(|&j| {
                j != i
                    && (form.poles[j] - form.poles[i].conj()).norm()
                        <= 1e-8 * (1.0 + form.poles[i].norm())
            }) {
                if !chosen.contains(&j) {
                    chosen.push(j);
                }
            }
        }
    }

    InterpolationData::new(
        chosen
            .into_iter()
            .map(|i| InterpolationPoint {
                shift: -form.poles[i],
                right: Some(form.right[i].clone()),
                left: Some(form.left[i].clone()),
            })
            .collect(),
    )
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
    fn validate_reports_abscissa() {
        let g = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let rep = g.validate().unwrap();
        assert!(rep.is_stable);
        assert!((rep.spectral_abscissa + 1.0).abs() < 1e-10);
    }

    #[test]
    fn evaluate_first_order() {
        let g = first_order();
        let g0 = g.evaluate(Complex64::new(0.0, 0.0)).unwrap();
        assert!((g0[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let gi = g.evaluate(Complex64::new(0.0, 1.0)).unwrap();
        assert!((gi[(0, 0)] - Complex64::new(0.5, -0.5)).norm() < 1e-14);
    }

    #[test]
    fn identity_weight_augmentation_is_identity() {
        let g = first_order();
        let v = StateSpaceModel::identity_weight(1);
        let h = augment_input(&g, &v).unwrap();
        assert_eq!(h.order(), 1);
        assert_eq!(h.a(), g.a());
        assert_eq!(h.b(), g.b());
        assert_eq!(h.c(), g.c());
        assert_eq!(h.d(), g.d());
        let ho = augment_output(&v, &g).unwrap();
        assert_eq!(ho.a(), g.a());
    }

    #[test]
    fn augmented_transfer_is_pointwise_product() {
        let g = StateSpaceModel::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.4, 0.0, -2.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, -0.5]),
            DMatrix::from_row_slice(1, 2, &[0.7, 1.1]),
            DMatrix::from_element(1, 1, 0.3),
        )
        .unwrap();
        let v = StateSpaceModel::new(
            DMatrix::from_element(1, 1, -4.0),
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.5),
        )
        .unwrap();
        for s in [
            Complex64::new(0.0, 0.3),
            Complex64::new(1.0, 2.0),
            Complex64::new(10.0, 0.0),
        ] {
            let lhs = augment_input(&g, &v).unwrap().evaluate(s).unwrap();
            let rhs = g.evaluate(s).unwrap() * v.evaluate(s).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
            let lhs_o = augment_output(&v, &g).unwrap().evaluate(s).unwrap();
            let rhs_o = v.evaluate(s).unwrap() * g.evaluate(s).unwrap();
            assert!((lhs_o - rhs_o).norm() < 1e-12);
        }
    }

    #[test]
    fn error_system_of_identical_models_is_zero() {
        let g = first_order();
        let e = weighted_error_system(&g, &g, None, None).unwrap();
        for s in [Complex64::new(0.5, 0.0), Complex64::new(0.0, 2.0)] {
            assert!(e.evaluate(s).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn improper_error_detected() {
        let mut d = first_order();
        d.d = DMatrix::from_element(1, 1, 1.0);
        let g = first_order();
        assert!(matches!(
            weighted_error_system(&g, &d, None, None),
            Err(Error::ImproperError(_))
        ));
    }

    #[test]
    fn pole_residue_roundtrip() {
        let g = StateSpaceModel::new(
            DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.2, -2.0, -1.0, 0.1, 0.0, 0.0, -3.0]),
            DMatrix::from_column_slice(3, 1, &[1.0, 0.5, -0.7]),
            DMatrix::from_row_slice(1, 3, &[0.3, -0.8, 1.2]),
            DMatrix::from_element(1, 1, 0.25),
        )
        .unwrap();
        let form = pole_residue(&g).unwrap();
        let back = form.realize().unwrap();
        for s in [Complex64::new(0.7, 0.0), Complex64::new(0.5, 1.5), Complex64::new(2.0, -0.3)] {
            let direct = g.evaluate(s).unwrap();
            assert!((form.transfer_at(s) - &direct).norm() < 1e-10 * direct.norm().max(1.0));
            assert!((back.evaluate(s).unwrap() - &direct).norm() < 1e-10 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn repeated_poles_detected() {
        let g = StateSpaceModel::new(
            DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -1.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(matches!(pole_residue(&g), Err(Error::RepeatedPoles(_))));
    }

    #[test]
    fn dominant_pole_selection() {
        // G = 10/(s+1) + 0.1/(s+2): index 10 vs 0.05
        let g = StateSpaceModel::new(
            DMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[10.0, 0.1]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let data = dominant_interpolation_data(&g, 1).unwrap();
        assert_eq!(data.len(), 1);
        assert!((data.shifts()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn conjugate_closure_added_automatically() {
        let data = InterpolationData::with_right(
            vec![Complex64::new(1.0, 2.0)],
            vec![DVector::from_element(1, Complex64::new(1.0, 0.5))],
        )
        .unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.closure_added(), 1);
        assert!(data.all_in_open_rhp());
        let reps = data.representatives();
        assert_eq!(reps.len(), 1);
        assert!(reps[0].shift.im > 0.0);
    }

    #[test]
    fn duplicate_shifts_rejected() {
        let r = InterpolationData::with_right(
            vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![
                DVector::from_element(1, Complex64::new(1.0, 0.0)),
                DVector::from_element(1, Complex64::new(2.0, 0.0)),
            ],
        );
        assert!(matches!(r, Err(Error::DuplicateShifts(_))));
    }
}
