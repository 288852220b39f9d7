use thiserror::Error;

/// Errors from the dense linear algebra layer.
#[derive(Debug, Clone, Error)]
pub enum MatError {
    #[error("matrix entry at ({row}, {col}) is not finite: {value}")]
    NotFinite { row: usize, col: usize, value: f64 },

    #[error("matrix dimensions must be positive")]
    EmptyMatrix,

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("matrix is not symmetric: max asymmetry {asymmetry:.3e} exceeds bound {bound:.3e}")]
    NotSymmetric { asymmetry: f64, bound: f64 },

    #[error("eigenvalue iteration failed to converge ({context})")]
    EigenFailure { context: String },

    #[error("linear system is numerically singular")]
    SingularSystem,

    #[error("invariant-subspace reordering broke down ({context})")]
    ReorderFailure { context: String },
}
