//! Singular values by one-sided (Hestenes) Jacobi, and pivoted-LU
//! log-determinants.

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use num_complex::Complex64;

const MAX_SWEEPS: usize = 80;

/// Singular values of `m` in descending order.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("singular values of an empty matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    // column-major copy: cols[j] is column j
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| (0..n).map(|i| m[(i, j)]).collect()).collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum()).collect();
    let tol = f64::EPSILON * n as f64;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (cp, cq) = {
                    let (left, right) = cols.split_at_mut(q);
                    (&mut left[p], &mut right[0])
                };
                let mut gamma = Complex64::new(0.0, 0.0);
                for (a, b) in cp.iter().zip(cq.iter()) {
                    gamma += a.conj() * b;
                }
                let g = gamma.norm();
                if g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate the phase out of gamma, then a real Jacobi rotation
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let pc = phase.conj();
                for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
                    let bq = *b * pc;
                    let ap = *a;
                    *a = ap * c - bq * s;
                    *b = ap * s + bq * c;
                }
                norms[p] = alpha - t * g;
                norms[q] = beta + t * g;
            }
        }
        // refresh norms to shed drift from the incremental updates
        for (nrm, c) in norms.iter_mut().zip(&cols) {
            *nrm = c.iter().map(|z| z.norm_sqr()).sum();
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { what: "one-sided Jacobi SVD", iterations: MAX_SWEEPS });
    }
    let mut sv: Vec<f64> = norms.iter().map(|x| x.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Pivots below this magnitude make the determinant numerically zero.
pub const SINGULAR_PIVOT: f64 = 1e-300;

/// `ln|det m|` from row-pivoted LU; `-inf` when a pivot underflows.
pub fn log_abs_det(m: &CMatrix) -> f64 {
    let n = m.dim();
    let mut a: Vec<Complex64> = m.as_slice().to_vec();
    let mut acc = 0.0;
    for k in 0..n {
        let (piv, pmag) = (k..n)
            .map(|i| (i, a[i * n + k].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pmag >= SINGULAR_PIVOT) {
            return f64::NEG_INFINITY;
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
        }
        let pivot = a[k * n + k];
        acc += pmag.ln();
        let inv = pivot.inv();
        let (top, bottom) = a.split_at_mut((k + 1) * n);
        let prow = &top[k * n + k + 1..k * n + n];
        for row in bottom.chunks_mut(n) {
            let l = row[k] * inv;
            if l.re == 0.0 && l.im == 0.0 {
                continue;
            }
            for (x, p) in row[k + 1..].iter_mut().zip(prow) {
                *x -= l * p;
            }
        }
    }
    acc
}
