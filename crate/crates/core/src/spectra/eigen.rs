//! Eigenvalues of general complex matrices.
//!
//! Diagonal balancing, Householder reduction to upper Hessenberg form, then
//! single-shift complex QR with Givens rotations and aggressive-free
//! deflation. Only eigenvalues are computed, so the rotations are applied to
//! the active window alone.

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Iteration budget in QR sweeps per matrix dimension.
pub const SWEEPS_PER_DIM: usize = 30;

#[inline]
fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Scale rows and columns by powers of two so that off-diagonal row and
/// column norms are comparable. A similarity transform; eigenvalues are
/// unchanged and rounding is exact.
fn balance(a: &mut CMatrix) {
    let n = a.dim();
    const RADIX: f64 = 2.0;
    let mut converged = false;
    let mut guard = 0;
    while !converged && guard < 100 {
        converged = true;
        guard += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[(j, i)]);
                    r += abs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            let mut cc = c;
            while cc < g {
                f *= RADIX;
                cc *= RADIX * RADIX;
            }
            g = r * RADIX;
            while cc > g {
                f /= RADIX;
                cc /= RADIX * RADIX;
            }
            if (cc + r / f) < 0.95 * s {
                converged = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut CMatrix) {
    let n = a.dim();
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        // reflector annihilating a[k+2.., k]
        let alpha_norm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let beta = -phase * alpha_norm;
        // v = x - beta e1, normalized so that H = I - 2 v v^H / (v^H v)
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= beta;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // left: A = A - tau v (v^H A) on rows k+1..n, columns k..n
        for j in k..n {
            let mut s = ZERO;
            for i in k + 1..n {
                s += v[i].conj() * a[(i, j)];
            }
            s *= tau;
            for i in k + 1..n {
                let vi = v[i];
                a[(i, j)] -= vi * s;
            }
        }
        // right: A = A - tau (A v) v^H on all rows, columns k+1..n
        for i in 0..n {
            let row = &a.row(i)[k + 1..n];
            let mut s = ZERO;
            for (x, vi) in row.iter().zip(&v[k + 1..n]) {
                s += x * vi;
            }
            s *= tau;
            for j in k + 1..n {
                let vj = v[j].conj();
                a[(i, j)] -= s * vj;
            }
        }
        a[(k + 1, k)] = beta;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Eigenvalue of the 2x2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let s = abs1(a) + abs1(b) + abs1(c) + abs1(d);
    if s == 0.0 {
        return ZERO;
    }
    let (a, b, c, d) = (a / s, b / s, c / s, d / s);
    let tr = (a + d) * 0.5;
    let disc = ((a - tr) * (a - tr) + b * c).sqrt();
    let l1 = tr + disc;
    let l2 = tr - disc;
    let pick = if (l1 - d).norm() <= (l2 - d).norm() { l1 } else { l2 };
    pick * s
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(r, 0)`.
#[inline]
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0)) ;
    }
    let nu = ax.hypot(ay);
    let c = ax / nu;
    let s = (x / ax) * y.conj() / nu;
    (c, s)
}

/// Eigenvalues of an upper Hessenberg matrix, destroying it.
fn hessenberg_qr(h: &mut CMatrix) -> Result<Vec<Complex64>> {
    let n = h.dim();
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    let ulp = f64::EPSILON;
    let safe_min = f64::MIN_POSITIVE;
    let small = safe_min * (n as f64 / ulp);
    let budget = SWEEPS_PER_DIM * n.max(1);
    let mut sweeps = 0usize;
    let mut hi = n - 1;
    let mut its = 0usize;
    loop {
        // locate the active unreduced block [lo, hi]
        let mut lo = 0;
        let mut k = hi;
        while k > 0 {
            let sub = abs1(h[(k, k - 1)]);
            if sub <= small {
                h[(k, k - 1)] = ZERO;
                lo = k;
                break;
            }
            let mut tst = abs1(h[(k - 1, k - 1)]) + abs1(h[(k, k)]);
            if tst == 0.0 {
                if k >= 2 {
                    tst += abs1(h[(k - 1, k - 2)]);
                }
                if k + 1 < n {
                    tst += abs1(h[(k + 1, k)]);
                }
            }
            if sub <= ulp * tst {
                // Ahues–Tisseur refinement of the deflation test
                let ab = abs1(h[(k, k - 1)]).max(abs1(h[(k - 1, k)]));
                let ba = abs1(h[(k, k - 1)]).min(abs1(h[(k - 1, k)]));
                let diff = h[(k - 1, k - 1)] - h[(k, k)];
                let aa = abs1(h[(k, k)]).max(abs1(diff));
                let bb = abs1(h[(k, k)]).min(abs1(diff));
                let s = aa + ab;
                if ba * (ab / s) <= small.max(ulp * (bb * (aa / s))) {
                    h[(k, k - 1)] = ZERO;
                    lo = k;
                    break;
                }
            }
            k -= 1;
        }

        if lo == hi {
            eig[hi] = h[(hi, hi)];
            if hi == 0 {
                break;
            }
            hi -= 1;
            its = 0;
            continue;
        }

        sweeps += 1;
        if sweeps > budget {
            return Err(Error::NoConvergence { what: "Hessenberg QR", iterations: budget });
        }
        its += 1;

        let shift = if its % 10 == 0 {
            // exceptional shift to break cycles
            let s = 0.75 * h[(hi, hi - 1)].re.abs();
            h[(hi, hi)] + s
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        // implicit single-shift sweep over rows/cols lo..=hi
        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let col_start = if k > lo { k - 1 } else { lo };
            for j in col_start..=hi {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
            let row_end = (k + 2).min(hi);
            let sc = s.conj();
            for i in lo..=row_end {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + sc * b;
                h[(i, k + 1)] = -s * a + b * c;
            }
        }
    }
    Ok(eig)
}

/// All eigenvalues of `m`, in no particular order.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if m.dim() == 0 {
        return Err(Error::InvalidArgument("eigenvalues of an empty matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let mut a = m.clone();
    balance(&mut a);
    hessenberg(&mut a);
    hessenberg_qr(&mut a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_matrix, EnsembleSpec, EntryKind};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn diagonal() {
        let m = CMatrix::from_diagonal(&[c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)]);
        let e = sorted(eigenvalues(&m).unwrap());
        let want = [c(-3.0, 0.0), c(0.0, 2.0), c(1.0, 0.0)];
        for (a, b) in e.iter().zip(&want) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn companion_of_z2_plus_1() {
        // z^2 + 1: [[0, -1], [1, 0]]
        let m = CMatrix::from_row_major(2, vec![c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let e = sorted(eigenvalues(&m).unwrap());
        assert!((e[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((e[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn one_by_one() {
        let m = CMatrix::from_diagonal(&[c(2.5, -1.0)]);
        assert_eq!(eigenvalues(&m).unwrap(), vec![c(2.5, -1.0)]);
    }

    #[test]
    fn upper_triangular_and_jordan_block() {
        let m = CMatrix::from_row_major(
            3,
            vec![c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)],
        );
        for e in eigenvalues(&m).unwrap() {
            // defective eigenvalue: perturbation ~ eps^(1/3)
            assert!((e - c(2.0, 0.0)).norm() < 1e-4);
        }
    }

    #[test]
    fn ginibre_trace_identity() {
        let spec = EnsembleSpec::new(EntryKind::ComplexGaussian, 50, 11);
        let m = sample_matrix(&spec).unwrap().scaled(1.0 / 50f64.sqrt());
        let e = eigenvalues(&m).unwrap();
        let sum: Complex64 = e.iter().sum();
        assert!((sum - m.trace()).norm() <= 1e-8 * 51.0);
    }

    #[test]
    fn real_matrix_gives_conjugate_pairs() {
        let spec = EnsembleSpec::new(EntryKind::RealGaussian, 30, 4);
        let m = sample_matrix(&spec).unwrap();
        let e = eigenvalues(&m).unwrap();
        for z in &e {
            let partner = e.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            assert!(partner < 1e-8 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn badly_scaled_matrix() {
        // similar to diag(1,2,3) through a wildly scaled diagonal
        let d = [1e-6, 1.0, 1e6];
        let base = CMatrix::from_row_major(
            3,
            vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)],
        );
        let m = CMatrix::from_fn(3, |i, j| base[(i, j)] * d[i] / d[j]);
        let e = sorted(eigenvalues(&m).unwrap());
        for (k, z) in e.iter().enumerate() {
            assert!((z - c(k as f64 + 1.0, 0.0)).norm() < 1e-9, "{z}");
        }
    }

    #[test]
    fn non_finite_rejected() {
        let m = CMatrix::from_diagonal(&[c(f64::NAN, 0.0)]);
        assert!(eigenvalues(&m).is_err());
    }
}
