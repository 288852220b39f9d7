//! CCARE problem representation, validation, the residual operator, shift
//! selection, and assembly of the per-step shifted CAREs both iteration
//! variants solve.

mod file;

pub use file::{
    builtin_example, ivanov_example1, parse_sym_matrix_list, ModeFile, ProblemFile,
    BUILTIN_EXAMPLE_NAMES,
};

use thiserror::Error;

use crate::care::{CareError, CareInstance};
use crate::matcore::{
    is_psd, spectral_abscissa, MatError, Matrix, SymMatrix, DEFAULT_PSD_TOL,
};

/// Default margin used when shifts are selected automatically.
pub const DEFAULT_SHIFT_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("mode index {index} out of range for {modes} modes")]
    IndexOutOfRange { index: usize, modes: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("invalid shift data: {context}")]
    InvalidShift { context: String },

    #[error("problem file is malformed: {context}")]
    Parse { context: String },

    #[error(transparent)]
    Care(#[from] CareError),

    #[error(transparent)]
    Mat(#[from] MatError),
}

/// A violated problem invariant; data, not an error.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SNotPsd { mode: usize },
    QNotPsd { mode: usize },
    NegativeCoupling { from: usize, to: usize, value: f64 },
    NonzeroDiagonalCoupling { mode: usize, value: f64 },
    ZeroCouplingRowSum { mode: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::SNotPsd { mode } => {
                write!(f, "mode {}: S is not positive semidefinite", mode + 1)
            }
            Violation::QNotPsd { mode } => {
                write!(f, "mode {}: Q is not positive semidefinite", mode + 1)
            }
            Violation::NegativeCoupling { from, to, value } => {
                write!(f, "negative coupling delta[{}][{}] = {}", from + 1, to + 1, value)
            }
            Violation::NonzeroDiagonalCoupling { mode, value } => {
                write!(f, "nonzero diagonal coupling delta[{0}][{0}] = {1}", mode + 1, value)
            }
            Violation::ZeroCouplingRowSum { mode } => {
                write!(f, "mode {}: coupling row sum is not positive", mode + 1)
            }
        }
    }
}

/// The full coupled problem data: per-mode `(A_i, S_i, Q_i)` plus the
/// nonnegative coupling matrix `delta` with zero diagonal.
#[derive(Debug, Clone)]
pub struct CcareProblem {
    n: usize,
    modes: usize,
    a: Vec<Matrix>,
    s: Vec<SymMatrix>,
    q: Vec<SymMatrix>,
    delta: Matrix,
}

impl CcareProblem {
    /// Structural construction; semantic invariants are reported by
    /// [`CcareProblem::validate`], not enforced here.
    pub fn new(
        a: Vec<Matrix>,
        s: Vec<SymMatrix>,
        q: Vec<SymMatrix>,
        delta: Matrix,
    ) -> Result<Self, ModelError> {
        let modes = a.len();
        if modes == 0 {
            return Err(ModelError::DimensionMismatch { context: "at least one mode required".into() });
        }
        if s.len() != modes || q.len() != modes {
            return Err(ModelError::DimensionMismatch {
                context: format!("{} A matrices against {} S and {} Q", modes, s.len(), q.len()),
            });
        }
        let n = a[0].rows();
        for (i, ai) in a.iter().enumerate() {
            if !ai.is_square() || ai.rows() != n {
                return Err(ModelError::DimensionMismatch {
                    context: format!("mode {}: A is {}x{}, expected {n}x{n}", i + 1, ai.rows(), ai.cols()),
                });
            }
        }
        for (i, si) in s.iter().enumerate() {
            if si.n() != n {
                return Err(ModelError::DimensionMismatch {
                    context: format!("mode {}: S has order {}, expected {n}", i + 1, si.n()),
                });
            }
        }
        for (i, qi) in q.iter().enumerate() {
            if qi.n() != n {
                return Err(ModelError::DimensionMismatch {
                    context: format!("mode {}: Q has order {}, expected {n}", i + 1, qi.n()),
                });
            }
        }
        if delta.rows() != modes || delta.cols() != modes {
            return Err(ModelError::DimensionMismatch {
                context: format!("delta is {}x{}, expected {modes}x{modes}", delta.rows(), delta.cols()),
            });
        }
        Ok(Self { n, modes, a, s, q, delta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_modes(&self) -> usize {
        self.modes
    }

    pub fn a(&self, i: usize) -> &Matrix {
        &self.a[i]
    }

    pub fn s(&self, i: usize) -> &SymMatrix {
        &self.s[i]
    }

    pub fn q(&self, i: usize) -> &SymMatrix {
        &self.q[i]
    }

    pub fn delta(&self, i: usize, j: usize) -> f64 {
        self.delta[(i, j)]
    }

    /// Check every problem invariant; an empty list means the data is valid.
    ///
    /// The only error source is an eigensolver failure inside the PSD checks.
    pub fn validate(&self) -> Result<Vec<Violation>, ModelError> {
        let mut out = Vec::new();
        for i in 0..self.modes {
            if !is_psd(&self.s[i], DEFAULT_PSD_TOL)? {
                out.push(Violation::SNotPsd { mode: i });
            }
            if !is_psd(&self.q[i], DEFAULT_PSD_TOL)? {
                out.push(Violation::QNotPsd { mode: i });
            }
        }
        let mut row_has_negative = vec![false; self.modes];
        for i in 0..self.modes {
            let diag = self.delta[(i, i)];
            if diag != 0.0 {
                out.push(Violation::NonzeroDiagonalCoupling { mode: i, value: diag });
            }
            for j in 0..self.modes {
                if i != j && self.delta[(i, j)] < 0.0 {
                    out.push(Violation::NegativeCoupling { from: i, to: j, value: self.delta[(i, j)] });
                    row_has_negative[i] = true;
                }
            }
        }
        // Positive row sums are required for genuinely coupled problems; a
        // single-mode problem degenerates to a plain CARE and is accepted.
        // Rows already flagged for negative entries are not re-flagged: the
        // row-sum rule is about modes left uncoupled.
        if self.modes >= 2 {
            for i in 0..self.modes {
                if row_has_negative[i] {
                    continue;
                }
                let row: f64 = (0..self.modes).filter(|&j| j != i).map(|j| self.delta[(i, j)]).sum();
                if row <= 0.0 {
                    out.push(Violation::ZeroCouplingRowSum { mode: i });
                }
            }
        }
        Ok(out)
    }

    /// Informational notes that are not violations.
    pub fn validation_notes(&self) -> Vec<String> {
        if self.modes == 1 {
            vec!["single-mode problem: coupling row-sum requirement waived, data is a plain CARE".into()]
        } else {
            Vec::new()
        }
    }
}

/// Nonnegative per-mode shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftVector(Vec<f64>);

impl ShiftVector {
    pub fn new(rho: Vec<f64>) -> Result<Self, ModelError> {
        if rho.is_empty() {
            return Err(ModelError::InvalidShift { context: "empty shift vector".into() });
        }
        if let Some(bad) = rho.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(ModelError::InvalidShift { context: format!("shift {bad} is not a nonnegative real") });
        }
        Ok(Self(rho))
    }

    pub fn uniform(modes: usize, value: f64) -> Result<Self, ModelError> {
        Self::new(vec![value; modes])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Current iterates for every mode at a given sweep.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub x: Vec<SymMatrix>,
    pub sweep_index: usize,
}

impl IterateState {
    pub fn new(x: Vec<SymMatrix>, sweep_index: usize) -> Self {
        Self { x, sweep_index }
    }

    /// True when every component is PSD under the given tolerance.
    pub fn all_psd(&self, tol: f64) -> Result<bool, ModelError> {
        for xi in &self.x {
            if !is_psd(xi, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn check_iterates(p: &CcareProblem, x: &[SymMatrix]) -> Result<(), ModelError> {
    if x.len() != p.modes {
        return Err(ModelError::DimensionMismatch {
            context: format!("{} iterates against {} modes", x.len(), p.modes),
        });
    }
    for (j, xj) in x.iter().enumerate() {
        if xj.n() != p.n {
            return Err(ModelError::DimensionMismatch {
                context: format!("iterate {} has order {}, expected {}", j + 1, xj.n(), p.n),
            });
        }
    }
    Ok(())
}

/// The residual operator for mode `i`:
/// `symmetrize(Ai' Xi + Xi Ai - Xi Si Xi + sum_{j != i} d_ij Xj + Qi)`.
pub fn ccare_residual(p: &CcareProblem, x: &[SymMatrix], i: usize) -> Result<SymMatrix, ModelError> {
    check_iterates(p, x)?;
    if i >= p.modes {
        return Err(ModelError::IndexOutOfRange { index: i, modes: p.modes });
    }
    let xi = x[i].as_matrix();
    let mut acc = p.a[i]
        .transpose()
        .matmul(xi)
        .add(&xi.matmul(&p.a[i]))
        .sub(&xi.matmul(p.s[i].as_matrix()).matmul(xi))
        .add(p.q[i].as_matrix());
    for (j, xj) in x.iter().enumerate() {
        if j != i {
            let w = p.delta[(i, j)];
            if w != 0.0 {
                acc = acc.add(&xj.as_matrix().scale(w));
            }
        }
    }
    Ok(SymMatrix::symmetrized(&acc))
}

/// Largest per-mode Frobenius norm of the residual operator.
pub fn residual_max_fro(p: &CcareProblem, x: &[SymMatrix]) -> Result<f64, ModelError> {
    let mut worst = 0.0f64;
    for i in 0..p.modes {
        worst = worst.max(ccare_residual(p, x, i)?.fro_norm());
    }
    Ok(worst)
}

/// Pick shifts that make every shifted drift matrix Hurwitz whenever it needs
/// to be: `rho_i = max(0, abscissa(A_i) + margin)`. With such shifts the PBH
/// conditions on `(A_i - rho_i I, S_i)` and `(A_i - rho_i I, Q_i)` hold
/// vacuously.
pub fn auto_shifts(p: &CcareProblem, margin: f64) -> Result<ShiftVector, ModelError> {
    if !margin.is_finite() || margin <= 0.0 {
        return Err(ModelError::InvalidShift { context: format!("margin must be positive, got {margin}") });
    }
    let mut rho = Vec::with_capacity(p.modes);
    for i in 0..p.modes {
        let abscissa = spectral_abscissa(&p.a[i])?;
        rho.push((abscissa + margin).max(0.0));
    }
    ShiftVector::new(rho)
}

/// Build the shifted CARE whose solution is the next iterate of mode `i`.
///
/// `x_new` holds the already-updated components `j < i` (accelerated sweeps)
/// or is empty (regular sweeps, which read only `x_old`). The assembled
/// constant term is
/// `Qi + sum_{j<i} d_ij Xj_new + sum_{j>i} d_ij Xj_old + 2 rho_i Xi_old`,
/// a sum of PSD terms, so instance construction re-asserts its PSD-ness.
pub fn assemble_step_care(
    p: &CcareProblem,
    rho: &ShiftVector,
    i: usize,
    x_new: &[SymMatrix],
    x_old: &[SymMatrix],
) -> Result<CareInstance, ModelError> {
    check_iterates(p, x_old)?;
    if i >= p.modes {
        return Err(ModelError::IndexOutOfRange { index: i, modes: p.modes });
    }
    if rho.len() != p.modes {
        return Err(ModelError::InvalidShift {
            context: format!("{} shifts against {} modes", rho.len(), p.modes),
        });
    }
    if !x_new.is_empty() && x_new.len() < i {
        return Err(ModelError::DimensionMismatch {
            context: format!("{} updated iterates do not cover modes below {}", x_new.len(), i + 1),
        });
    }
    let shifted_a = {
        let mut m = p.a[i].clone();
        for d in 0..p.n {
            m[(d, d)] -= rho.get(i);
        }
        m
    };
    let mut q_eff = p.q[i].clone();
    for j in 0..p.modes {
        if j == i {
            continue;
        }
        let w = p.delta[(i, j)];
        if w == 0.0 {
            continue;
        }
        let source = if j < i && !x_new.is_empty() { &x_new[j] } else { &x_old[j] };
        if source.n() != p.n {
            return Err(ModelError::DimensionMismatch {
                context: format!("updated iterate {} has order {}, expected {}", j + 1, source.n(), p.n),
            });
        }
        q_eff = q_eff.add(&source.scale(w));
    }
    let two_rho = 2.0 * rho.get(i);
    if two_rho != 0.0 {
        q_eff = q_eff.add(&x_old[i].scale(two_rho));
    }
    Ok(CareInstance::new(shifted_a, p.s[i].clone(), q_eff)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::care::care_residual;

    fn benchmark() -> CcareProblem {
        ivanov_example1().to_problem().unwrap()
    }

    #[test]
    fn benchmark_validates_clean() {
        let p = benchmark();
        assert!(p.validate().unwrap().is_empty());
        assert!(p.validation_notes().is_empty());
        assert_eq!(p.n(), 2);
        assert_eq!(p.n_modes(), 2);
        // S1 = B1 B1' with B1 = [5, -5]'.
        assert_eq!(p.s(0)[(0, 0)], 25.0);
        assert_eq!(p.s(0)[(0, 1)], -25.0);
        assert_eq!(p.delta(0, 1), 2.0);
        assert_eq!(p.delta(1, 0), 3.0);
    }

    #[test]
    fn validate_flags_negative_coupling() {
        let p = benchmark();
        let mut delta = p.delta.clone();
        delta[(0, 1)] = -1.0;
        let bad = CcareProblem::new(p.a.clone(), p.s.clone(), p.q.clone(), delta).unwrap();
        let violations = bad.validate().unwrap();
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::NegativeCoupling { from: 0, to: 1, .. }));
    }

    #[test]
    fn validate_flags_zero_row_sums() {
        let p = benchmark();
        let bad = CcareProblem::new(p.a.clone(), p.s.clone(), p.q.clone(), Matrix::zeros(2, 2)).unwrap();
        let violations = bad.validate().unwrap();
        assert_eq!(violations.len(), 2);
        assert!(violations.iter().all(|v| matches!(v, Violation::ZeroCouplingRowSum { .. })));
    }

    #[test]
    fn single_mode_gets_note_not_violation() {
        let p = benchmark();
        let single = CcareProblem::new(
            vec![p.a[0].clone()],
            vec![p.s[0].clone()],
            vec![p.q[0].clone()],
            Matrix::zeros(1, 1),
        )
        .unwrap();
        assert!(single.validate().unwrap().is_empty());
        assert_eq!(single.validation_notes().len(), 1);
    }

    #[test]
    fn residual_at_zero_is_q() {
        let p = benchmark();
        let zeros = vec![SymMatrix::zeros(2), SymMatrix::zeros(2)];
        let r0 = ccare_residual(&p, &zeros, 0).unwrap();
        assert_eq!(r0[(1, 1)], 2.0);
        assert_eq!(residual_max_fro(&p, &zeros).unwrap(), 2.0);
    }

    #[test]
    fn residual_small_at_printed_minimal_solution() {
        let p = benchmark();
        let x = vec![
            SymMatrix::from_diag(&[0.0, 0.28204532]),
            SymMatrix::from_diag(&[0.0, 0.27641488]),
        ];
        for i in 0..2 {
            let r = ccare_residual(&p, &x, i).unwrap().fro_norm();
            assert!(r <= 5e-7, "mode {}: residual {r}", i + 1);
        }
    }

    #[test]
    fn residual_matches_bruteforce_reevaluation() {
        // Independent element-wise evaluation with scalar loops.
        let p = benchmark();
        let x = vec![
            SymMatrix::from_matrix(
                &Matrix::from_rows(&[vec![0.31, -0.12], vec![-0.12, 0.44]]).unwrap(),
            )
            .unwrap(),
            SymMatrix::from_matrix(
                &Matrix::from_rows(&[vec![0.05, 0.02], vec![0.02, 0.61]]).unwrap(),
            )
            .unwrap(),
        ];
        for i in 0..2 {
            let got = ccare_residual(&p, &x, i).unwrap();
            let n = 2;
            let mut manual = vec![0.0; n * n];
            for r in 0..n {
                for c in 0..n {
                    let mut v = p.q(i)[(r, c)];
                    for k in 0..n {
                        v += p.a(i)[(k, r)] * x[i][(k, c)];
                        v += x[i][(r, k)] * p.a(i)[(k, c)];
                        for l in 0..n {
                            v -= x[i][(r, k)] * p.s(i)[(k, l)] * x[i][(l, c)];
                        }
                    }
                    for j in 0..2 {
                        if j != i {
                            v += p.delta(i, j) * x[j][(r, c)];
                        }
                    }
                    manual[r * n + c] = v;
                }
            }
            for r in 0..n {
                for c in 0..n {
                    let sym = 0.5 * (manual[r * n + c] + manual[c * n + r]);
                    assert!((got[(r, c)] - sym).abs() < 1e-13, "mode {i} entry ({r},{c})");
                }
            }
        }
    }

    #[test]
    fn single_mode_residual_equals_care_residual() {
        let p = benchmark();
        let single = CcareProblem::new(
            vec![p.a[0].clone()],
            vec![p.s[0].clone()],
            vec![p.q[0].clone()],
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let x = SymMatrix::from_diag(&[0.4, 0.9]);
        let via_model = ccare_residual(&single, std::slice::from_ref(&x), 0).unwrap();
        let inst = CareInstance::new(p.a[0].clone(), p.s[0].clone(), p.q[0].clone()).unwrap();
        let via_care = care_residual(&inst, &x).unwrap();
        assert_eq!(via_model.as_matrix().as_slice(), via_care.as_matrix().as_slice());
    }

    #[test]
    fn auto_shift_examples() {
        let p = benchmark();
        let rho = auto_shifts(&p, 0.01).unwrap();
        assert!((rho.get(0) - 1.01).abs() < 1e-10);
        assert!((rho.get(1) - 1.01).abs() < 1e-10);
        let rho = auto_shifts(&p, 0.5).unwrap();
        assert!((rho.get(0) - 1.5).abs() < 1e-10);
        // Stable drift matrices need no shift.
        let stable = CcareProblem::new(
            vec![Matrix::identity(2).scale(-1.0), Matrix::identity(2).scale(-2.0)],
            vec![SymMatrix::zeros(2), SymMatrix::zeros(2)],
            vec![SymMatrix::identity(2), SymMatrix::identity(2)],
            Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let rho = auto_shifts(&stable, 0.01).unwrap();
        assert_eq!(rho.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn auto_shifts_stabilize_when_needed() {
        // Whenever a drift matrix is not already Hurwitz, the selected shift
        // makes it so.
        let mut rng = crate::synth::rng(61);
        for _ in 0..10 {
            let a = crate::synth::random_matrix(&mut rng, 3, -1.0, 1.0);
            let p = CcareProblem::new(
                vec![a],
                vec![SymMatrix::identity(3)],
                vec![SymMatrix::identity(3)],
                Matrix::zeros(1, 1),
            )
            .unwrap();
            let rho = auto_shifts(&p, DEFAULT_SHIFT_MARGIN).unwrap();
            let abscissa = spectral_abscissa(p.a(0)).unwrap();
            let mut shifted = p.a(0).clone();
            for d in 0..3 {
                shifted[(d, d)] -= rho.get(0);
            }
            assert!(
                crate::matcore::is_stable(&shifted, 1e-12).unwrap() || abscissa < 0.0,
                "abscissa {abscissa}, shift {}",
                rho.get(0)
            );
        }
    }

    #[test]
    fn assemble_zero_iterates_keeps_q() {
        let p = benchmark();
        let rho = ShiftVector::new(vec![1.01, 1.01]).unwrap();
        let zeros = vec![SymMatrix::zeros(2), SymMatrix::zeros(2)];
        let inst = assemble_step_care(&p, &rho, 0, &[], &zeros).unwrap();
        assert_eq!(inst.q().as_matrix().as_slice(), p.q(0).as_matrix().as_slice());
        assert!((inst.a()[(0, 0)] - (1.0 - 1.01)).abs() < 1e-15);
    }

    #[test]
    fn assemble_accelerated_consumes_updated_component() {
        let p = benchmark();
        let rho = ShiftVector::new(vec![1.01, 1.01]).unwrap();
        let zeros = vec![SymMatrix::zeros(2), SymMatrix::zeros(2)];
        let x1_new = SymMatrix::from_diag(&[0.0, 0.2]);
        let inst = assemble_step_care(&p, &rho, 1, std::slice::from_ref(&x1_new), &zeros).unwrap();
        // Q' = Q2 + delta_21 * X1_new = Q2 + 3 X1_new.
        assert!((inst.q()[(1, 1)] - (1.5 + 3.0 * 0.2)).abs() < 1e-14);
    }

    #[test]
    fn assemble_regular_and_accelerated_agree_on_equal_iterates() {
        let p = benchmark();
        let rho = ShiftVector::new(vec![1.01, 1.01]).unwrap();
        let x = vec![
            SymMatrix::from_diag(&[0.1, 0.3]),
            SymMatrix::from_diag(&[0.2, 0.1]),
        ];
        let regular = assemble_step_care(&p, &rho, 1, &[], &x).unwrap();
        let accelerated = assemble_step_care(&p, &rho, 1, &x[..1], &x).unwrap();
        assert_eq!(
            regular.q().as_matrix().as_slice(),
            accelerated.q().as_matrix().as_slice()
        );
    }

    #[test]
    fn residual_is_permutation_covariant() {
        let p = benchmark();
        let x = vec![
            SymMatrix::from_diag(&[0.3, 0.7]),
            SymMatrix::from_diag(&[0.9, 0.2]),
        ];
        let base = residual_max_fro(&p, &x).unwrap();
        // Swap the two modes along with delta rows and columns.
        let swapped = CcareProblem::new(
            vec![p.a[1].clone(), p.a[0].clone()],
            vec![p.s[1].clone(), p.s[0].clone()],
            vec![p.q[1].clone(), p.q[0].clone()],
            Matrix::from_rows(&[vec![0.0, p.delta(1, 0)], vec![p.delta(0, 1), 0.0]]).unwrap(),
        )
        .unwrap();
        let x_swapped = vec![x[1].clone(), x[0].clone()];
        let permuted = residual_max_fro(&swapped, &x_swapped).unwrap();
        assert_eq!(base, permuted);
    }
}
