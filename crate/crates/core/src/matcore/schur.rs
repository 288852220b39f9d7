//! Real Schur decomposition `M = Z T Z'` with `Z` orthogonal and `T`
//! quasi-upper-triangular (1x1 blocks for real eigenvalues, 2x2 blocks for
//! complex conjugate pairs), plus adjacent-block swapping so that a selected
//! set of eigenvalues can be moved to the leading position.
//!
//! The reduction is the classic pipeline: Householder similarity to upper
//! Hessenberg form, then the Francis implicit double-shift QR iteration with
//! the usual exceptional-shift fallbacks. Block swapping solves the small
//! Sylvester equation for the separating subspace and re-orthogonalizes.

use super::error::MatError;
use super::lu::lu_solve;
use super::matrix::Matrix;

/// `m = z * t * z'` with orthogonal `z` and quasi-upper-triangular `t`.
pub(crate) struct RealSchur {
    pub t: Matrix,
    pub z: Matrix,
}

/// Maximum QR iterations charged to a single eigenvalue before giving up.
const MAX_EIG_ITER: usize = 120;

pub(crate) fn real_schur(m: &Matrix) -> Result<RealSchur, MatError> {
    assert!(m.is_square(), "real_schur needs a square matrix");
    let n = m.rows();
    let mut t = m.clone();
    let mut z = Matrix::identity(n);
    hessenberg(&mut t, &mut z);
    francis_qr(&mut t, &mut z)?;
    // Hygiene: everything below the first subdiagonal is exactly zero, and
    // subdiagonal entries are either exact zeros or part of a 2x2 block.
    for i in 2..n {
        for j in 0..(i - 1) {
            t[(i, j)] = 0.0;
        }
    }
    Ok(RealSchur { t, z })
}

/// Householder reduction to upper Hessenberg form, accumulating `z`.
fn hessenberg(h: &mut Matrix, z: &mut Matrix) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let m0 = k + 1;
        let m = n - m0;
        let scale: f64 = (m0..n).map(|i| h[(i, k)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = (m0..n).map(|i| h[(i, k)] / scale).collect();
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
        // Rows m0..n of columns k..n: H <- P H.
        for j in k..n {
            let s: f64 = (0..m).map(|i| v[i] * h[(m0 + i, j)]).sum();
            for i in 0..m {
                h[(m0 + i, j)] -= 2.0 * s * v[i];
            }
        }
        // Columns m0..n of all rows: H <- H P.
        for i in 0..n {
            let s: f64 = (0..m).map(|j| v[j] * h[(i, m0 + j)]).sum();
            for j in 0..m {
                h[(i, m0 + j)] -= 2.0 * s * v[j];
            }
        }
        // Accumulate Z <- Z P.
        for i in 0..n {
            let s: f64 = (0..m).map(|j| v[j] * z[(i, m0 + j)]).sum();
            for j in 0..m {
                z[(i, m0 + j)] -= 2.0 * s * v[j];
            }
        }
        // The eliminated column, exactly.
        h[(m0, k)] = scale * alpha;
        for i in (m0 + 1)..n {
            h[(i, k)] = 0.0;
        }
    }
}

/// Francis implicit double-shift QR on an upper Hessenberg matrix,
/// accumulating the similarity into `z`. On return `h` is quasi-triangular.
fn francis_qr(h: &mut Matrix, z: &mut Matrix) -> Result<(), MatError> {
    let nn = h.rows();
    if nn <= 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let norm: f64 = {
        // Absolute-entry norm of the Hessenberg part, for deflation scaling.
        let mut s = 0.0;
        for i in 0..nn {
            for j in i.saturating_sub(1)..nn {
                s += h[(i, j)].abs();
            }
        }
        s
    };
    if norm == 0.0 {
        return Ok(());
    }

    let mut n: isize = nn as isize - 1;
    let mut exshift = 0.0f64;
    let mut iter = 0usize;

    while n >= 0 {
        let nu = n as usize;
        // Look for a single small subdiagonal element.
        let mut l = nu;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            // One real root found.
            h[(nu, nu)] += exshift;
            if nu > 0 {
                h[(nu, nu - 1)] = 0.0;
            }
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            // A 2x2 block converged; split it if its roots are real.
            let w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            let p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            let q = p * p + w;
            let mut zz = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            if q >= 0.0 {
                // Real pair: rotate so both appear as 1x1 blocks.
                zz = if p >= 0.0 { p + zz } else { p - zz };
                let xx = h[(nu, nu - 1)];
                let s = xx.abs() + zz.abs();
                let mut c = xx / s;
                let mut d = zz / s;
                let r = (c * c + d * d).sqrt();
                c /= r;
                d /= r;
                for j in (nu - 1)..nn {
                    zz = h[(nu - 1, j)];
                    h[(nu - 1, j)] = d * zz + c * h[(nu, j)];
                    h[(nu, j)] = d * h[(nu, j)] - c * zz;
                }
                for i in 0..=nu {
                    zz = h[(i, nu - 1)];
                    h[(i, nu - 1)] = d * zz + c * h[(i, nu)];
                    h[(i, nu)] = d * h[(i, nu)] - c * zz;
                }
                for i in 0..nn {
                    zz = z[(i, nu - 1)];
                    z[(i, nu - 1)] = d * zz + c * z[(i, nu)];
                    z[(i, nu)] = d * z[(i, nu)] - c * zz;
                }
                h[(nu, nu - 1)] = 0.0;
            }
            // Either way the block is deflated from the active window.
            if nu >= 2 {
                h[(nu - 1, nu - 2)] = 0.0;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet: form a (possibly exceptional) shift.
            let (mut p, mut q, mut r): (f64, f64, f64);
            let mut x = h[(nu, nu)];
            let mut y = 0.0;
            let mut w = 0.0;
            if l < nu {
                y = h[(nu - 1, nu - 1)];
                w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            }
            if iter % 10 == 0 && iter > 0 && iter != 30 {
                // Wilkinson's ad hoc exceptional shift, repeated periodically
                // to break shift cycles on clustered spectra. It is applied
                // across the whole active window so deflated entries can be
                // restored from the single accumulated exshift.
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                let s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                let mut s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            if iter > MAX_EIG_ITER {
                return Err(MatError::EigenFailure {
                    context: format!("Francis QR stalled on trailing index {nu}"),
                });
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = nu - 2;
            loop {
                let zz = h[(m, m)];
                r = x - zz;
                let s = y - zz;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - zz - r - s;
                r = h[(m + 2, m + 1)];
                let scale = p.abs() + q.abs() + r.abs();
                p /= scale;
                q /= scale;
                r /= scale;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + zz.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }

            // Double QR sweep on rows l..=nu, columns m..=nu.
            for k in m..nu {
                let notlast = k != nu - 1;
                let mut col_scale = 0.0;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    col_scale = p.abs() + q.abs() + r.abs();
                    if col_scale == 0.0 {
                        continue;
                    }
                    p /= col_scale;
                    q /= col_scale;
                    r /= col_scale;
                }
                let mut s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -s * col_scale;
                } else if l != m {
                    h[(k, k - 1)] = -h[(k, k - 1)];
                }
                p += s;
                let x2 = p / s;
                let y2 = q / s;
                let z2 = r / s;
                q /= p;
                r /= p;

                // Row modification.
                for j in k..nn {
                    let mut pp = h[(k, j)] + q * h[(k + 1, j)];
                    if notlast {
                        pp += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= pp * z2;
                    }
                    h[(k, j)] -= pp * x2;
                    h[(k + 1, j)] -= pp * y2;
                }
                // Column modification.
                for i in 0..=nu.min(k + 3) {
                    let mut pp = x2 * h[(i, k)] + y2 * h[(i, k + 1)];
                    if notlast {
                        pp += z2 * h[(i, k + 2)];
                        h[(i, k + 2)] -= pp * r;
                    }
                    h[(i, k)] -= pp;
                    h[(i, k + 1)] -= pp * q;
                }
                // Accumulate transformations.
                for i in 0..nn {
                    let mut pp = x2 * z[(i, k)] + y2 * z[(i, k + 1)];
                    if notlast {
                        pp += z2 * z[(i, k + 2)];
                        z[(i, k + 2)] -= pp * r;
                    }
                    z[(i, k)] -= pp;
                    z[(i, k + 1)] -= pp * q;
                }
            }
        }
    }
    Ok(())
}

/// Eigenvalues read off the diagonal blocks of a quasi-triangular matrix,
/// as `(re, im)` pairs in block order.
pub(crate) fn schur_eigenvalues(t: &Matrix) -> Vec<(f64, f64)> {
    let n = t.rows();
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)] != 0.0 {
            let a = t[(k, k)];
            let b = t[(k, k + 1)];
            let c = t[(k + 1, k)];
            let d = t[(k + 1, k + 1)];
            let re = (a + d) / 2.0;
            let disc = ((a - d) / 2.0).powi(2) + b * c;
            if disc < 0.0 {
                let im = (-disc).sqrt();
                out.push((re, im));
                out.push((re, -im));
            } else {
                // A 2x2 block with real roots; the QR splitting normally
                // prevents this, but swaps can reintroduce borderline cases.
                let s = disc.sqrt();
                out.push((re + s, 0.0));
                out.push((re - s, 0.0));
            }
            k += 2;
        } else {
            out.push((t[(k, k)], 0.0));
            k += 1;
        }
    }
    out
}

/// Sizes of the diagonal blocks of a quasi-triangular matrix, in order.
fn block_sizes(t: &Matrix) -> Vec<usize> {
    let n = t.rows();
    let mut sizes = Vec::new();
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)] != 0.0 {
            sizes.push(2);
            k += 2;
        } else {
            sizes.push(1);
            k += 1;
        }
    }
    sizes
}

/// Real part of the eigenvalue(s) of the block starting at `k`.
fn block_eig_re(t: &Matrix, k: usize, size: usize) -> f64 {
    if size == 1 {
        t[(k, k)]
    } else {
        (t[(k, k)] + t[(k + 1, k + 1)]) / 2.0
    }
}

/// Reorder a real Schur form so every block with `Re l < 0` leads.
/// Returns the dimension of the leading stable invariant subspace.
pub(crate) fn ordered_real_schur(m: &Matrix) -> Result<(RealSchur, usize), MatError> {
    let mut rs = real_schur(m)?;
    loop {
        let sizes = block_sizes(&rs.t);
        let starts: Vec<usize> = sizes
            .iter()
            .scan(0usize, |acc, &s| {
                let start = *acc;
                *acc += s;
                Some(start)
            })
            .collect();
        let stable: Vec<bool> = sizes
            .iter()
            .zip(&starts)
            .map(|(&s, &k)| block_eig_re(&rs.t, k, s) < 0.0)
            .collect();
        // First adjacent (unstable, stable) pair, bubbling stables up.
        let mut swapped = false;
        for b in 0..sizes.len().saturating_sub(1) {
            if !stable[b] && stable[b + 1] {
                swap_adjacent_blocks(&mut rs.t, &mut rs.z, starts[b], sizes[b], sizes[b + 1])?;
                swapped = true;
                break;
            }
        }
        if !swapped {
            let dim = sizes
                .iter()
                .zip(&stable)
                .filter(|&(_, &st)| st)
                .map(|(&s, _)| s)
                .sum();
            return Ok((rs, dim));
        }
    }
}

/// Swap the adjacent diagonal blocks at `j` (sizes `p` then `q`) by an
/// orthogonal similarity, updating `t` and accumulating into `z`.
fn swap_adjacent_blocks(
    t: &mut Matrix,
    z: &mut Matrix,
    j: usize,
    p: usize,
    q: usize,
) -> Result<(), MatError> {
    let s = p + q;
    let t11 = t.block(j, j, p, p);
    let t12 = t.block(j, j + p, p, q);
    let t22 = t.block(j + p, j + p, q, q);

    // Solve T11 X - X T22 = -T12 for the separating subspace.
    // Row-major vectorization: (T11 (x) Iq - Ip (x) T22') vec(X) = -vec(T12).
    let mut k = Matrix::zeros(p * q, p * q);
    for a in 0..p {
        for b in 0..q {
            let row = a * q + b;
            for c in 0..p {
                k[(row, c * q + b)] += t11[(a, c)];
            }
            for d in 0..q {
                k[(row, a * q + d)] -= t22[(d, b)];
            }
        }
    }
    let rhs = Matrix::from_fn(p * q, 1, |i, _| -t12[(i / q, i % q)]);
    let x = lu_solve(&k, &rhs).map_err(|_| MatError::ReorderFailure {
        context: format!("Sylvester system for the block swap at {j} is singular"),
    })?;

    // Orthonormal basis of span([X; I]) and its completion.
    let mut w = Matrix::zeros(s, q);
    for a in 0..p {
        for b in 0..q {
            w[(a, b)] = x[(a * q + b, 0)];
        }
    }
    for b in 0..q {
        w[(p + b, b)] = 1.0;
    }
    let qfull = householder_q(&w);

    // Apply the similarity on the window rows/columns.
    let old_rows = t.block(j, 0, s, t.cols());
    let mut new_rows = Matrix::zeros(s, t.cols());
    for a in 0..s {
        for c in 0..t.cols() {
            let mut acc = 0.0;
            for b in 0..s {
                acc += qfull[(b, a)] * old_rows[(b, c)];
            }
            new_rows[(a, c)] = acc;
        }
    }
    t.set_block(j, 0, &new_rows);
    let old_cols = t.block(0, j, t.rows(), s);
    let mut new_cols = Matrix::zeros(t.rows(), s);
    for r in 0..t.rows() {
        for a in 0..s {
            let mut acc = 0.0;
            for b in 0..s {
                acc += old_cols[(r, b)] * qfull[(b, a)];
            }
            new_cols[(r, a)] = acc;
        }
    }
    t.set_block(0, j, &new_cols);
    let old_zc = z.block(0, j, z.rows(), s);
    let mut new_zc = Matrix::zeros(z.rows(), s);
    for r in 0..z.rows() {
        for a in 0..s {
            let mut acc = 0.0;
            for b in 0..s {
                acc += old_zc[(r, b)] * qfull[(b, a)];
            }
            new_zc[(r, a)] = acc;
        }
    }
    z.set_block(0, j, &new_zc);

    // The swapped-out block must vanish below the new leading block.
    let bound = 1e-8 * (1.0 + t.fro_norm());
    for r in (j + q)..(j + s) {
        for c in j..(j + q) {
            if t[(r, c)].abs() > bound {
                return Err(MatError::ReorderFailure {
                    context: format!("swap residual {:.3e} at ({r}, {c}) exceeds {bound:.3e}", t[(r, c)]),
                });
            }
            t[(r, c)] = 0.0;
        }
    }
    Ok(())
}

/// Full orthogonal factor of the QR decomposition of a tall matrix.
fn householder_q(w: &Matrix) -> Matrix {
    let (rows, cols) = (w.rows(), w.cols());
    let mut r = w.clone();
    let mut q = Matrix::identity(rows);
    for k in 0..cols.min(rows.saturating_sub(1)) {
        let m = rows - k;
        let scale: f64 = (k..rows).map(|i| r[(i, k)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = (k..rows).map(|i| r[(i, k)] / scale).collect();
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
        for j in k..cols {
            let s: f64 = (0..m).map(|i| v[i] * r[(k + i, j)]).sum();
            for i in 0..m {
                r[(k + i, j)] -= 2.0 * s * v[i];
            }
        }
        for i in 0..rows {
            let s: f64 = (0..m).map(|j| v[j] * q[(i, k + j)]).sum();
            for j in 0..m {
                q[(i, k + j)] -= 2.0 * s * v[j];
            }
        }
    }
    q
}
