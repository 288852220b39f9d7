//! Symmetric eigenvalues via Householder tridiagonalization followed by the
//! implicit-shift QL iteration. Eigenvalues only; no vector accumulation.

use super::error::MatError;
use super::matrix::SymMatrix;

const MAX_QL_ITER: usize = 50;

/// All eigenvalues of `x`, ascending.
pub(crate) fn sym_eigvals(x: &SymMatrix) -> Result<Vec<f64>, MatError> {
    let n = x.n();
    let mut a = x.as_matrix().as_slice().to_vec();
    let (d, e) = tridiagonalize(&mut a, n);
    let mut vals = ql_eigvals(d, e)?;
    vals.sort_by(|p, q| p.partial_cmp(q).expect("eigenvalues are finite"));
    Ok(vals)
}

/// Reduce a symmetric matrix (row-major, worked in place) to tridiagonal form.
/// Returns `(diagonal, subdiagonal)`; `e[i]` couples positions `i` and `i+1`.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    for k in 0..n.saturating_sub(2) {
        let m0 = k + 1;
        let m = n - m0;
        // Householder vector for the column below the subdiagonal.
        let scale: f64 = (m0..n).map(|i| a[i * n + k].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = (m0..n).map(|i| a[i * n + k] / scale).collect();
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for t in v.iter_mut() {
            *t /= vnorm;
        }
        // Two-sided reflection of the trailing block:
        // B <- B - 2 v z' - 2 z v' with z = B v - (v' B v) v.
        let mut w = vec![0.0; m];
        for i in 0..m {
            let mut s = 0.0;
            for j in 0..m {
                s += a[(m0 + i) * n + (m0 + j)] * v[j];
            }
            w[i] = s;
        }
        let beta: f64 = v.iter().zip(&w).map(|(vi, wi)| vi * wi).sum();
        let z: Vec<f64> = w.iter().zip(&v).map(|(wi, vi)| wi - beta * vi).collect();
        for i in 0..m {
            for j in 0..m {
                a[(m0 + i) * n + (m0 + j)] -= 2.0 * (v[i] * z[j] + z[i] * v[j]);
            }
        }
        // The eliminated column and row.
        a[m0 * n + k] = scale * alpha;
        a[k * n + m0] = scale * alpha;
        for i in (m0 + 1)..n {
            a[i * n + k] = 0.0;
            a[k * n + i] = 0.0;
        }
    }
    let d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut e = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        e[i] = a[(i + 1) * n + i];
    }
    (d, e)
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix.
/// `e[i]` couples `d[i]` and `d[i+1]`; `e[n-1]` is ignored.
fn ql_eigvals(mut d: Vec<f64>, mut e: Vec<f64>) -> Result<Vec<f64>, MatError> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        let mut iter = 0;
        loop {
            // First index m >= l whose coupling to m+1 is negligible.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITER {
                return Err(MatError::EigenFailure {
                    context: format!("tridiagonal QL stalled at index {l} after {MAX_QL_ITER} iterations"),
                });
            }
            // Wilkinson-style shift from the leading 2x2.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(if g == 0.0 { 1.0 } else { g }));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut restarted = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Underflow: split the problem and retry.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    restarted = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if restarted {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}
