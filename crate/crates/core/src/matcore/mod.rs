//! Dense real matrix primitives: spectra, symmetry, positive semidefiniteness,
//! Loewner-order comparisons, norms, and stability tests.
//!
//! Everything here is pure and operates on immutable values; the heavy lifting
//! is a symmetric tridiagonal QL eigensolver, a Hessenberg/shifted-QR real
//! Schur decomposition (with eigenvalue reordering for invariant subspaces),
//! a one-sided Jacobi singular value routine, and a pivoted LU.

mod error;
mod lu;
mod matrix;
mod order;
mod schur;
mod svd;
mod symeig;

pub use error::MatError;
pub use matrix::{Matrix, SymMatrix};
pub use order::{loewner_compare, OrderRelation, OrderResult};

pub(crate) use lu::lu_solve;
#[cfg(test)]
pub(crate) use lu::lu_det;
pub(crate) use schur::{ordered_real_schur, real_schur, schur_eigenvalues};
pub(crate) use svd::singular_values;

/// Default relative tolerance for Loewner-order classification.
pub const DEFAULT_ORDER_TOL: f64 = 1e-8;
/// Default relative tolerance for positive-semidefiniteness tests.
pub const DEFAULT_PSD_TOL: f64 = 1e-8;
/// Default tolerance under which strict Hurwitz stability is decided.
pub const DEFAULT_STABILITY_TOL: f64 = 1e-12;
/// Default relative bound on the asymmetry accepted by [`SymMatrix`].
pub const DEFAULT_SYM_TOL: f64 = 1e-6;

/// All eigenvalues of a symmetric matrix, sorted ascending.
///
/// The sum of the returned values equals the trace up to
/// `1e-10 * (1 + |trace|)`; tests rely on that identity.
pub fn sym_eigvals(x: &SymMatrix) -> Result<Vec<f64>, MatError> {
    symeig::sym_eigvals(x)
}

/// All eigenvalues of a general square matrix as `(re, im)` pairs, with
/// multiplicity. Complex conjugates are both present; nothing is deduplicated.
pub fn eigvals_general(m: &Matrix) -> Result<Vec<(f64, f64)>, MatError> {
    if !m.is_square() {
        return Err(MatError::DimensionMismatch {
            context: format!("eigvals_general needs a square matrix, got {}x{}", m.rows(), m.cols()),
        });
    }
    let rs = real_schur(m)?;
    Ok(schur_eigenvalues(&rs.t))
}

/// Largest real part over the eigenvalues of `m`.
pub fn spectral_abscissa(m: &Matrix) -> Result<f64, MatError> {
    let eigs = eigvals_general(m)?;
    Ok(eigs
        .iter()
        .map(|&(re, _)| re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Hurwitz stability: true iff every eigenvalue satisfies `Re l < -tol`.
pub fn is_stable(m: &Matrix, tol: f64) -> Result<bool, MatError> {
    Ok(spectral_abscissa(m)? < -tol)
}

/// Positive semidefiniteness with a relative eigenvalue tolerance:
/// `l_min(X) >= -tol * (1 + max |l(X)|)`.
pub fn is_psd(x: &SymMatrix, tol: f64) -> Result<bool, MatError> {
    let eigs = sym_eigvals(x)?;
    if eigs.is_empty() {
        return Ok(true);
    }
    let min = eigs[0];
    let spectral_radius = eigs.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    Ok(min >= -tol * (1.0 + spectral_radius))
}
