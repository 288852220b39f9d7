//! Singular values by one-sided Jacobi: rotate column pairs until mutual
//! orthogonality, then read the values off as column norms. Accurate for the
//! small rank decisions the PBH tests need.

use super::error::MatError;
use super::matrix::Matrix;

const MAX_SWEEPS: usize = 60;
const ORTH_TOL: f64 = 1e-14;

/// All singular values of `m`, descending.
pub(crate) fn singular_values(m: &Matrix) -> Result<Vec<f64>, MatError> {
    // Work on the tall orientation so columns are the short dimension.
    let a = if m.rows() >= m.cols() { m.clone() } else { m.transpose() };
    let (rows, cols) = (a.rows(), a.cols());
    let mut a = a.as_slice().to_vec();
    let col = |data: &[f64], j: usize, i: usize| data[i * cols + j];

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..rows {
                    let vp = col(&a, p, i);
                    let vq = col(&a, q, i);
                    app += vp * vp;
                    aqq += vq * vq;
                    apq += vp * vq;
                }
                if apq.abs() <= ORTH_TOL * (app * aqq).sqrt() {
                    continue;
                }
                // Jacobi rotation annihilating the (p, q) inner product.
                let zeta = (aqq - app) / (2.0 * apq);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let vp = a[i * cols + p];
                    let vq = a[i * cols + q];
                    a[i * cols + p] = c * vp - s * vq;
                    a[i * cols + q] = s * vp + c * vq;
                }
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(MatError::EigenFailure {
            context: format!("one-sided Jacobi did not converge in {MAX_SWEEPS} sweeps"),
        });
    }
    let mut sv: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|i| col(&a, j, i).powi(2)).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).expect("singular values are finite"));
    Ok(sv)
}
