//! Dense LU with partial pivoting; solve and determinant helpers.

use super::error::MatError;
use super::matrix::Matrix;

/// Relative pivot threshold below which the system is declared singular.
const PIVOT_RTOL: f64 = 1e-14;

struct LuFactors {
    /// Combined L (unit lower) and U factors, row-major.
    lu: Vec<f64>,
    perm: Vec<usize>,
    #[cfg_attr(not(test), allow(dead_code))]
    sign: f64,
    n: usize,
}

fn factor(a: &Matrix) -> Result<LuFactors, MatError> {
    assert!(a.is_square(), "LU needs a square matrix");
    let n = a.rows();
    let mut lu = a.as_slice().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let amax = a.max_abs();
    let thresh = PIVOT_RTOL * amax.max(f64::MIN_POSITIVE);
    for k in 0..n {
        // Pick the pivot row.
        let mut piv = k;
        let mut best = lu[k * n + k].abs();
        for i in (k + 1)..n {
            let v = lu[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= thresh {
            return Err(MatError::SingularSystem);
        }
        if piv != k {
            for j in 0..n {
                lu.swap(k * n + j, piv * n + j);
            }
            perm.swap(k, piv);
            sign = -sign;
        }
        let pivot = lu[k * n + k];
        for i in (k + 1)..n {
            let m = lu[i * n + k] / pivot;
            lu[i * n + k] = m;
            for j in (k + 1)..n {
                lu[i * n + j] -= m * lu[k * n + j];
            }
        }
    }
    Ok(LuFactors { lu, perm, sign, n })
}

impl LuFactors {
    fn solve(&self, b: &Matrix) -> Matrix {
        let n = self.n;
        assert_eq!(b.rows(), n, "LU solve rhs row mismatch");
        let k = b.cols();
        let mut x = Matrix::zeros(n, k);
        for c in 0..k {
            // Permuted forward substitution.
            let mut y = vec![0.0; n];
            for i in 0..n {
                let mut acc = b[(self.perm[i], c)];
                for j in 0..i {
                    acc -= self.lu[i * n + j] * y[j];
                }
                y[i] = acc;
            }
            // Back substitution.
            for i in (0..n).rev() {
                let mut acc = y[i];
                for j in (i + 1)..n {
                    acc -= self.lu[i * n + j] * x[(j, c)];
                }
                x[(i, c)] = acc / self.lu[i * n + i];
            }
        }
        x
    }

    #[cfg(test)]
    fn det(&self) -> f64 {
        let mut d = self.sign;
        for i in 0..self.n {
            d *= self.lu[i * self.n + i];
        }
        d
    }
}

/// Solve `A X = B` for possibly multiple right-hand sides.
pub(crate) fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix, MatError> {
    Ok(factor(a)?.solve(b))
}

/// Determinant via the pivoted factorization; 0 when numerically singular.
/// A test oracle for characteristic-polynomial residual checks.
#[cfg(test)]
pub(crate) fn lu_det(a: &Matrix) -> Result<f64, MatError> {
    match factor(a) {
        Ok(f) => Ok(f.det()),
        Err(MatError::SingularSystem) => Ok(0.0),
        Err(e) => Err(e),
    }
}
