//! Error type shared by all reduction and linear-algebra routines.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the numerical kernels and reduction algorithms.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    /// The matrix pencil of a Lyapunov/Sylvester equation or a resolvent
    /// evaluation is singular; usually a marginally stable system upstream.
    #[error("singular pencil: {0}")]
    SingularPencil(String),

    /// Eigenvector matrix too ill-conditioned to trust the factorization.
    #[error("matrix is numerically defective (eigenvector condition number {cond:.3e})")]
    DefectiveMatrix { cond: f64 },

    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("repeated poles: {0}")]
    RepeatedPoles(String),

    /// A transfer function that must be strictly proper has a nonzero
    /// feedthrough, so its H2 norm is unbounded.
    #[error("improper transfer function: {0}")]
    ImproperError(String),

    #[error("unstable system: spectral abscissa {0:.6e}")]
    UnstableSystem(f64),

    #[error("reduction order {r} out of range 1..={n}")]
    OrderOutOfRange { r: usize, n: usize },

    #[error("rank-deficient gramian factors: numerical rank {rank} < requested order {r}")]
    RankDeficientFactors { rank: usize, r: usize },

    /// An interpolation shift coincides with an eigenvalue of the augmented
    /// system matrix, so the shifted solve is singular.
    #[error("shift collision: {0}")]
    ShiftCollision(String),

    #[error("duplicate interpolation shifts: {0}")]
    DuplicateShifts(String),

    #[error("rational Krylov basis is numerically rank deficient ({rank} of {want} columns independent)")]
    DeflatedBasis { rank: usize, want: usize },

    /// The feed matrix lies in the range of the basis, so the Sylvester
    /// parameterization of the reduced model is undefined.
    #[error("degenerate residual in Krylov parameterization (smallest singular value {0:.3e})")]
    DegenerateResidual(f64),

    #[error("interpolation shift not in the open right half-plane: {0}")]
    UnstableShift(String),

    #[error("iterate became unstable: {0}")]
    UnstableIterate(String),

    #[error("biorthogonalization breakdown (smallest singular value {0:.3e})")]
    BiorthogonalBreakdown(f64),

    #[error("null-space projection matrix is singular")]
    SingularNullProjection,
}
