//! Deterministic random-instance generators for tests and experiments.
//!
//! Stable drift matrices are produced by shifting a bounded random matrix
//! past the largest eigenvalue of its symmetric part, which bounds the
//! spectral abscissa by the field of values. Solvable coupled problems are
//! reverse-engineered so that the identity tuple is an exact solution; that
//! single known solution certifies solvability, which the monotone-iteration
//! test suites rely on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::care::CareInstance;
use crate::matcore::{sym_eigvals, Matrix, SymMatrix};
use crate::model::CcareProblem;

/// Seeded generator so every suite is reproducible bit-for-bit.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n x n` matrix with entries uniform in `[lo, hi)`.
pub fn random_matrix(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(n, n, |_, _| rng.random_range(lo..hi))
}

/// Random positive semidefinite matrix `scale/n * G G'` with full rank
/// almost surely.
pub fn random_psd(rng: &mut impl Rng, n: usize, scale: f64) -> SymMatrix {
    random_psd_rank(rng, n, n, scale)
}

/// Random positive semidefinite matrix of the given rank (at most `n`).
pub fn random_psd_rank(rng: &mut impl Rng, n: usize, rank: usize, scale: f64) -> SymMatrix {
    let rank = rank.clamp(1, n);
    let g = Matrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0));
    SymMatrix::symmetrized(&g.matmul(&g.transpose()).scale(scale / n as f64))
}

/// Hurwitz matrix with spectral abscissa at most `-margin`: a bounded random
/// matrix shifted past the top of its field of values.
pub fn random_stable(rng: &mut impl Rng, n: usize, margin: f64) -> Matrix {
    let m = random_matrix(rng, n, -0.5, 0.5);
    let sym_top = *sym_eigvals(&SymMatrix::symmetrized(&m))
        .expect("eigensolver on a small random matrix")
        .last()
        .expect("nonempty spectrum");
    m.sub(&Matrix::identity(n).scale(sym_top + margin))
}

/// Random CARE triple with Hurwitz `A`, so both PBH conditions hold
/// vacuously.
pub fn random_care_instance(rng: &mut impl Rng, n: usize) -> CareInstance {
    let margin = rng.random_range(0.5..1.5);
    let a = random_stable(rng, n, margin);
    let s_scale = rng.random_range(0.2..1.0);
    let s = random_psd(rng, n, s_scale);
    let q_scale = rng.random_range(0.2..1.0);
    let q = random_psd(rng, n, q_scale);
    CareInstance::new(a, s, q).expect("generated data satisfies the instance invariants")
}

/// Random coupled problem that provably has a positive semidefinite solution:
/// the data is reverse-engineered so the all-identity tuple solves it exactly.
///
/// With couplings `d_ij` in `[0.2, 0.6)`, drifts `A_i = M_i - c_i I` shifted
/// by `c_i = lmax(sym M_i)/1 + row_i/2 + 1`, small `S_i`, and
/// `Q_i = -(A_i + A_i') + S_i - row_i I`, one checks `Q_i >= 2I + S_i > 0`
/// and that `X_i = I` zeroes every residual. Every `A_i` is Hurwitz with
/// abscissa at most `-1 - row_i/2`, so zero shifts already satisfy the PBH
/// conditions, the upper-bound requirements of the decreasing regime hold for
/// any `c0 I` start with `c0 >= 1`, and `A_i - S_i X` stays Hurwitz for the
/// relevant `X`.
pub fn random_solvable_ccare(rng: &mut impl Rng, n: usize, modes: usize) -> CcareProblem {
    let mut delta = Matrix::zeros(modes, modes);
    for i in 0..modes {
        for j in 0..modes {
            if i != j {
                delta[(i, j)] = rng.random_range(0.2..0.6);
            }
        }
    }
    let mut a = Vec::with_capacity(modes);
    let mut s = Vec::with_capacity(modes);
    let mut q = Vec::with_capacity(modes);
    for i in 0..modes {
        let row: f64 = (0..modes).map(|j| delta[(i, j)]).sum();
        let m = random_matrix(rng, n, -0.5, 0.5);
        let sym_top = *sym_eigvals(&SymMatrix::symmetrized(&m))
            .expect("eigensolver on a small random matrix")
            .last()
            .expect("nonempty spectrum");
        let shift = sym_top + 0.5 * row + 1.0;
        let a_i = m.sub(&Matrix::identity(n).scale(shift));
        let g = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let s_i = SymMatrix::symmetrized(&g.matmul(&g.transpose()).scale(0.2 / (n * n) as f64));
        let q_i = SymMatrix::symmetrized(
            &a_i.add(&a_i.transpose())
                .scale(-1.0)
                .add(s_i.as_matrix())
                .sub(&Matrix::identity(n).scale(row)),
        );
        a.push(a_i);
        s.push(s_i);
        q.push(q_i);
    }
    CcareProblem::new(a, s, q, delta).expect("generated data is structurally consistent")
}
