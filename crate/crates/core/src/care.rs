//! Single-equation CARE machinery: PBH stabilizability/detectability tests,
//! Lyapunov solves, the stabilizing solver for
//!
//! ```text
//! A'X + XA - XSX + Q = 0,   S >= 0, Q >= 0,
//! ```
//!
//! and an independent Newton-Kleinman iteration used to cross-check it.
//!
//! The solver follows the invariant-subspace route: form the 2n x 2n
//! Hamiltonian `[[A, -S], [-Q, -A']]`, order its real Schur form so the n
//! stable eigenvalues lead, and read the stabilizing solution off the
//! spanning block as `X = U2 U1^{-1}`. Under the PBH preconditions this X is
//! the unique positive semidefinite solution with `A - SX` Hurwitz.

use thiserror::Error;

use crate::matcore::{
    self, is_psd, lu_solve, ordered_real_schur, singular_values, spectral_abscissa, MatError,
    Matrix, SymMatrix, DEFAULT_PSD_TOL,
};

/// Default relative threshold for the PBH numerical rank decisions.
pub const DEFAULT_PBH_TOL: f64 = 1e-10;

/// Eigenvalues with `Re l >= -CLOSED_RHP_MARGIN` count as closed right
/// half-plane: borderline modes must be controlled/observed.
const CLOSED_RHP_MARGIN: f64 = 1e-10;

/// Sweep cap for the Newton-Kleinman cross-check.
const NEWTON_MAX_SWEEPS: usize = 200;

#[derive(Debug, Clone, Error)]
pub enum CareError {
    #[error("(A, S) is not stabilizable (PBH rank test failed)")]
    NotStabilizable,

    #[error("(A, Q) is not detectable (PBH rank test failed)")]
    NotDetectable,

    #[error("coefficient matrix is not Hurwitz (spectral abscissa {abscissa:.3e})")]
    UnstableCoefficient { abscissa: f64 },

    #[error("linear system is numerically singular")]
    SingularSystem,

    #[error("stable invariant subspace extraction failed: {context}")]
    SubspaceFailure { context: String },

    #[error("iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("invalid CARE data: {context}")]
    InvalidInstance { context: String },

    #[error(transparent)]
    Mat(#[from] MatError),
}

/// One CARE triple `(A, S, Q)` with `S >= 0` and `Q >= 0` checked on entry.
#[derive(Debug, Clone)]
pub struct CareInstance {
    a: Matrix,
    s: SymMatrix,
    q: SymMatrix,
}

impl CareInstance {
    pub fn new(a: Matrix, s: SymMatrix, q: SymMatrix) -> Result<Self, CareError> {
        if !a.is_square() || a.rows() != s.n() || a.rows() != q.n() {
            return Err(CareError::InvalidInstance {
                context: format!(
                    "incompatible shapes: A {}x{}, S order {}, Q order {}",
                    a.rows(),
                    a.cols(),
                    s.n(),
                    q.n()
                ),
            });
        }
        if !is_psd(&s, DEFAULT_PSD_TOL)? {
            return Err(CareError::InvalidInstance { context: "S is not positive semidefinite".into() });
        }
        if !is_psd(&q, DEFAULT_PSD_TOL)? {
            return Err(CareError::InvalidInstance { context: "Q is not positive semidefinite".into() });
        }
        Ok(Self { a, s, q })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn s(&self) -> &SymMatrix {
        &self.s
    }

    pub fn q(&self) -> &SymMatrix {
        &self.q
    }
}

/// A stabilizing CARE solution together with its certificates.
#[derive(Debug, Clone)]
pub struct CareSolution {
    pub x: SymMatrix,
    /// Spectral abscissa of `A - SX`; negative for a stabilizing solution.
    pub closed_loop_abscissa: f64,
    /// Frobenius norm of the CARE residual at `x`.
    pub residual_fro: f64,
}

/// Residual tolerance accepted from the Schur-based solver. Scales
/// quadratically in the solution since the residual does.
pub fn care_res_tol(inst: &CareInstance, x: &SymMatrix) -> f64 {
    1e-9 * (1.0 + inst.q.fro_norm() + x.fro_norm().powi(2) * inst.s.fro_norm())
}

/// PBH test: `(A, S)` is stabilizable iff `[A - lI | S]` has full row rank at
/// every eigenvalue `l` of `A` in the closed right half-plane.
pub fn pbh_stabilizable(a: &Matrix, s: &SymMatrix, tol: f64) -> Result<bool, CareError> {
    if !a.is_square() || a.rows() != s.n() {
        return Err(CareError::InvalidInstance {
            context: format!("PBH shapes: A {}x{}, S order {}", a.rows(), a.cols(), s.n()),
        });
    }
    let eigs = matcore::eigvals_general(a)?;
    for (re, im) in eigs {
        if re < -CLOSED_RHP_MARGIN {
            continue;
        }
        if !pbh_full_rank(a, s.as_matrix(), re, im, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// PBH test: `(A, Q)` is detectable iff `(A', Q')` is stabilizable.
pub fn pbh_detectable(a: &Matrix, q: &SymMatrix, tol: f64) -> Result<bool, CareError> {
    pbh_stabilizable(&a.transpose(), q, tol)
}

/// Full row rank of `[A - lI | S]` at a possibly complex `l`, decided on
/// singular values with threshold `tol * s_max * max(rows, cols)`. Complex
/// eigenvalues go through the real embedding, which doubles every singular
/// value's multiplicity but preserves the rank decision.
fn pbh_full_rank(a: &Matrix, s: &Matrix, re: f64, im: f64, tol: f64) -> Result<bool, CareError> {
    let n = a.rows();
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= re;
    }
    let block = if im == 0.0 {
        shifted.hstack(s)
    } else {
        let im_eye = Matrix::identity(n).scale(im);
        let zero = Matrix::zeros(n, n);
        let top = shifted.hstack(s).hstack(&im_eye).hstack(&zero);
        let bottom = im_eye.scale(-1.0).hstack(&zero).hstack(&shifted).hstack(s);
        top.vstack(&bottom)
    };
    let sv = singular_values(&block)?;
    let smax = sv[0];
    if smax == 0.0 {
        return Ok(false);
    }
    let thresh = tol * smax * block.rows().max(block.cols()) as f64;
    let rank = sv.iter().filter(|&&v| v > thresh).count();
    Ok(rank == block.rows())
}

/// Solve `A'X + XA + C = 0` for Hurwitz `A` through the vectorized
/// `n^2 x n^2` dense system.
pub fn solve_lyapunov(a: &Matrix, c: &SymMatrix) -> Result<SymMatrix, CareError> {
    if !a.is_square() || a.rows() != c.n() {
        return Err(CareError::InvalidInstance {
            context: format!("Lyapunov shapes: A {}x{}, C order {}", a.rows(), a.cols(), c.n()),
        });
    }
    let abscissa = spectral_abscissa(a)?;
    if abscissa >= 0.0 {
        return Err(CareError::UnstableCoefficient { abscissa });
    }
    let n = a.rows();
    // Row-major vectorization: (A' (x) I + I (x) A') vec(X) = -vec(C).
    let mut k = Matrix::zeros(n * n, n * n);
    for p in 0..n {
        for q in 0..n {
            let row = p * n + q;
            for r in 0..n {
                k[(row, r * n + q)] += a[(r, p)];
                k[(row, p * n + r)] += a[(r, q)];
            }
        }
    }
    let rhs = Matrix::from_fn(n * n, 1, |i, _| -c[(i / n, i % n)]);
    let x = lu_solve(&k, &rhs).map_err(|e| match e {
        MatError::SingularSystem => CareError::SingularSystem,
        other => CareError::Mat(other),
    })?;
    let xm = Matrix::from_fn(n, n, |i, j| x[(i * n + j, 0)]);
    Ok(SymMatrix::symmetrized(&xm))
}

/// CARE residual `symmetrize(A'X + XA - XSX + Q)` at a candidate `X`.
pub fn care_residual(inst: &CareInstance, x: &SymMatrix) -> Result<SymMatrix, CareError> {
    if x.n() != inst.n() {
        return Err(CareError::Mat(MatError::DimensionMismatch {
            context: format!("residual of order-{} X against order-{} instance", x.n(), inst.n()),
        }));
    }
    let xm = x.as_matrix();
    let at_x = inst.a.transpose().matmul(xm);
    let x_a = xm.matmul(&inst.a);
    let x_s_x = xm.matmul(inst.s.as_matrix()).matmul(xm);
    let sum = at_x.add(&x_a).sub(&x_s_x).add(inst.q.as_matrix());
    Ok(SymMatrix::symmetrized(&sum))
}

/// The unique stabilizing positive semidefinite CARE solution.
///
/// Preconditions (checked, reported distinctly): `(A, S)` stabilizable and
/// `(A, Q)` detectable.
pub fn solve_care(inst: &CareInstance) -> Result<CareSolution, CareError> {
    if !pbh_stabilizable(&inst.a, &inst.s, DEFAULT_PBH_TOL)? {
        return Err(CareError::NotStabilizable);
    }
    if !pbh_detectable(&inst.a, &inst.q, DEFAULT_PBH_TOL)? {
        return Err(CareError::NotDetectable);
    }
    let n = inst.n();
    // Hamiltonian [[A, -S], [-Q, -A']].
    let mut ham = Matrix::zeros(2 * n, 2 * n);
    ham.set_block(0, 0, &inst.a);
    ham.set_block(0, n, &inst.s.as_matrix().scale(-1.0));
    ham.set_block(n, 0, &inst.q.as_matrix().scale(-1.0));
    ham.set_block(n, n, &inst.a.transpose().scale(-1.0));

    let (rs, stable_dim) = ordered_real_schur(&ham).map_err(|e| match e {
        MatError::ReorderFailure { context } => CareError::SubspaceFailure { context },
        other => CareError::Mat(other),
    })?;
    if stable_dim != n {
        return Err(CareError::SubspaceFailure {
            context: format!("Hamiltonian has {stable_dim} stable eigenvalues, expected {n}"),
        });
    }
    let u1 = rs.z.block(0, 0, n, n);
    let u2 = rs.z.block(n, 0, n, n);
    // X = U2 U1^{-1}, via U1' X' = U2'.
    let xt = lu_solve(&u1.transpose(), &u2.transpose()).map_err(|e| match e {
        MatError::SingularSystem => CareError::SubspaceFailure {
            context: "leading block of the stable subspace basis is singular".into(),
        },
        other => CareError::Mat(other),
    })?;
    let x = SymMatrix::symmetrized(&xt.transpose());

    // Certify the solution before handing it out.
    let closed_loop = inst.a.sub(&inst.s.as_matrix().matmul(x.as_matrix()));
    let closed_loop_abscissa = spectral_abscissa(&closed_loop)?;
    let residual_fro = care_residual(inst, &x)?.fro_norm();
    let tol = care_res_tol(inst, &x);
    if closed_loop_abscissa >= 0.0 {
        return Err(CareError::SubspaceFailure {
            context: format!("closed loop not Hurwitz (abscissa {closed_loop_abscissa:.3e})"),
        });
    }
    if residual_fro > tol {
        return Err(CareError::SubspaceFailure {
            context: format!("residual {residual_fro:.3e} exceeds tolerance {tol:.3e}"),
        });
    }
    if !is_psd(&x, DEFAULT_PSD_TOL)? {
        return Err(CareError::SubspaceFailure {
            context: "computed solution is not positive semidefinite".into(),
        });
    }
    Ok(CareSolution { x, closed_loop_abscissa, residual_fro })
}

/// Newton-Kleinman iteration from a stabilizing initial guess; independent of
/// the Schur route and used as its oracle in tests.
///
/// Repeats `X_{m+1} = lyapunov(A - S X_m, Q + X_m S X_m)` until
/// `||X_{m+1} - X_m||_F < 1e-12 (1 + ||X_m||_F)`.
pub fn newton_care_oracle(inst: &CareInstance, x0: &SymMatrix) -> Result<SymMatrix, CareError> {
    if x0.n() != inst.n() {
        return Err(CareError::InvalidInstance {
            context: format!("initial guess order {} against instance order {}", x0.n(), inst.n()),
        });
    }
    let s_mat = inst.s.as_matrix();
    let cl0 = inst.a.sub(&s_mat.matmul(x0.as_matrix()));
    let abscissa = spectral_abscissa(&cl0)?;
    if abscissa >= 0.0 {
        return Err(CareError::UnstableCoefficient { abscissa });
    }
    let mut x = x0.clone();
    for _ in 0..NEWTON_MAX_SWEEPS {
        let xm = x.as_matrix();
        let a_cl = inst.a.sub(&s_mat.matmul(xm));
        let xsx = SymMatrix::symmetrized(&xm.matmul(s_mat).matmul(xm));
        let c = inst.q.add(&xsx);
        let next = solve_lyapunov(&a_cl, &c)?;
        let step = next.sub(&x).fro_norm();
        let done = step < 1e-12 * (1.0 + x.fro_norm());
        x = next;
        if done {
            return Ok(x);
        }
    }
    Err(CareError::NoConvergence { sweeps: NEWTON_MAX_SWEEPS })
}
