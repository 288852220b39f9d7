use super::error::MatError;
use super::matrix::SymMatrix;
use super::symeig::sym_eigvals;

/// Outcome of a Loewner-order comparison between two symmetric matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderRelation {
    GreaterEqual,
    LessEqual,
    Equal,
    Incomparable,
}

impl OrderRelation {
    /// `X >= Y` up to tolerance, i.e. `GreaterEqual` or `Equal`.
    pub fn is_ge(self) -> bool {
        matches!(self, OrderRelation::GreaterEqual | OrderRelation::Equal)
    }

    /// `X <= Y` up to tolerance, i.e. `LessEqual` or `Equal`.
    pub fn is_le(self) -> bool {
        matches!(self, OrderRelation::LessEqual | OrderRelation::Equal)
    }

    pub fn label(self) -> &'static str {
        match self {
            OrderRelation::GreaterEqual => "GreaterEqual",
            OrderRelation::LessEqual => "LessEqual",
            OrderRelation::Equal => "Equal",
            OrderRelation::Incomparable => "Incomparable",
        }
    }
}

/// Classification of `X - Y` by its extreme eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderResult {
    pub relation: OrderRelation,
    /// Smallest eigenvalue of `X - Y`.
    pub min_eig_diff: f64,
    /// Largest eigenvalue of `X - Y`.
    pub max_eig_diff: f64,
}

/// Compare `X` and `Y` in the Loewner order.
///
/// The effective tolerance is relative, `tol * (1 + max |l(X - Y)|)`:
/// `Equal` when both extreme eigenvalues of the difference are within it,
/// `GreaterEqual`/`LessEqual` when the difference is semidefinite up to it,
/// `Incomparable` when the difference is indefinite.
pub fn loewner_compare(x: &SymMatrix, y: &SymMatrix, tol: f64) -> Result<OrderResult, MatError> {
    if x.n() != y.n() {
        return Err(MatError::DimensionMismatch {
            context: format!("loewner_compare of order {} against order {}", x.n(), y.n()),
        });
    }
    let diff = x.sub(y);
    let eigs = sym_eigvals(&diff)?;
    let min = eigs[0];
    let max = eigs[eigs.len() - 1];
    let eff = tol * (1.0 + min.abs().max(max.abs()));
    let relation = if min.abs() <= eff && max.abs() <= eff {
        OrderRelation::Equal
    } else if min >= -eff {
        OrderRelation::GreaterEqual
    } else if max <= eff {
        OrderRelation::LessEqual
    } else {
        OrderRelation::Incomparable
    };
    Ok(OrderResult { relation, min_eig_diff: min, max_eig_diff: max })
}

#[cfg(test)]
mod tests {
    use super::super::{is_psd, DEFAULT_ORDER_TOL};
    use super::*;
    use crate::matcore::Matrix;

    #[test]
    fn equal_matrices() {
        let x = SymMatrix::identity(2);
        let r = loewner_compare(&x, &x, DEFAULT_ORDER_TOL).unwrap();
        assert_eq!(r.relation, OrderRelation::Equal);
    }

    #[test]
    fn strictly_greater() {
        let x = SymMatrix::from_diag(&[2.0, 2.0]);
        let y = SymMatrix::from_diag(&[1.0, 1.0]);
        let r = loewner_compare(&x, &y, DEFAULT_ORDER_TOL).unwrap();
        assert_eq!(r.relation, OrderRelation::GreaterEqual);
        assert!(r.min_eig_diff > 0.9);
    }

    #[test]
    fn indefinite_difference_is_incomparable() {
        let x = SymMatrix::from_diag(&[2.0, 0.0]);
        let y = SymMatrix::from_diag(&[0.0, 1.0]);
        let r = loewner_compare(&x, &y, DEFAULT_ORDER_TOL).unwrap();
        assert_eq!(r.relation, OrderRelation::Incomparable);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let x = SymMatrix::identity(2);
        let y = SymMatrix::identity(3);
        assert!(matches!(
            loewner_compare(&x, &y, DEFAULT_ORDER_TOL),
            Err(MatError::DimensionMismatch { .. })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn sym_pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (
                prop::collection::vec(-4.0f64..4.0, n * n),
                prop::collection::vec(-4.0f64..4.0, n * n),
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn antisymmetric_up_to_tolerance(n in 1usize..5, (ex, ey) in sym_pair(5)) {
                let x = SymMatrix::symmetrized(&Matrix::from_fn(n, n, |i, j| ex[i * 5 + j]));
                let y = SymMatrix::symmetrized(&Matrix::from_fn(n, n, |i, j| ey[i * 5 + j]));
                let fwd = loewner_compare(&x, &y, DEFAULT_ORDER_TOL).unwrap();
                let bwd = loewner_compare(&y, &x, DEFAULT_ORDER_TOL).unwrap();
                if fwd.relation == OrderRelation::GreaterEqual
                    && fwd.min_eig_diff > DEFAULT_ORDER_TOL
                {
                    prop_assert_eq!(bwd.relation, OrderRelation::LessEqual);
                }
                // Extreme eigenvalues of the negated difference swap and flip sign.
                prop_assert!((fwd.min_eig_diff + bwd.max_eig_diff).abs() <= 1e-9 * (1.0 + fwd.min_eig_diff.abs()));
            }

            #[test]
            fn psd_iff_ge_zero(n in 1usize..5, (ex, _) in sym_pair(5)) {
                let x = SymMatrix::symmetrized(&Matrix::from_fn(n, n, |i, j| ex[i * 5 + j]));
                let zero = SymMatrix::zeros(n);
                let psd = is_psd(&x, DEFAULT_ORDER_TOL).unwrap();
                let rel = loewner_compare(&x, &zero, DEFAULT_ORDER_TOL).unwrap().relation;
                prop_assert_eq!(psd, rel.is_ge(), "is_psd {} rel {:?}", psd, rel);
            }
        }
    }
}
