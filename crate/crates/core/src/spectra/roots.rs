//! Polynomial roots by Aberth–Ehrlich iteration with log-scaled evaluation.
//!
//! Coefficients are held as `ln|a_k|` plus a unit phase, which keeps Weyl
//! polynomials of degree in the thousands representable. Evaluation subtracts
//! the largest term's log-magnitude before summing, so `f` and `f'` are
//! returned as (log-modulus, phase) pairs.

use super::eigen::eigenvalues;
use crate::ensembles::WeylCoefficients;
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Residual bound `|f(z)| / Σ|a_k z^k|` accepted for a root.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Largest degree for which the companion-matrix fallback is attempted.
pub const COMPANION_MAX_DEGREE: usize = 64;
const MAX_ITER: usize = 2000;

/// A polynomial `Σ a_k z^k` in log-magnitude/phase form, ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPoly {
    log_mag: Vec<f64>,
    phase: Vec<Complex64>,
}

/// Log-scale value of a sum of complex terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    /// `ln|Σ t_k|`, `-inf` for an exact zero.
    pub log_abs: f64,
    pub phase: Complex64,
    /// `ln Σ|t_k|`, the scale the sum is measured against.
    pub log_scale: f64,
}

impl LogValue {
    /// `|Σ t_k| / Σ|t_k|`
    pub fn relative(&self) -> f64 {
        if self.log_scale == f64::NEG_INFINITY {
            return 0.0;
        }
        (self.log_abs - self.log_scale).exp()
    }
}

fn sum_log_terms(terms: impl Iterator<Item = (f64, Complex64)> + Clone) -> LogValue {
    let top = terms.clone().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return LogValue { log_abs: f64::NEG_INFINITY, phase: Complex64::new(1.0, 0.0), log_scale: f64::NEG_INFINITY };
    }
    let mut s = Complex64::new(0.0, 0.0);
    let mut a = 0.0;
    for (l, ph) in terms {
        if l == f64::NEG_INFINITY {
            continue;
        }
        let w = (l - top).exp();
        s += ph * w;
        a += w;
    }
    let m = s.norm();
    let phase = if m > 0.0 { s / m } else { Complex64::new(1.0, 0.0) };
    LogValue { log_abs: top + m.ln(), phase, log_scale: top + a.ln() }
}

impl LogPoly {
    /// From linear-scale coefficients `a_0..a_d`.
    pub fn from_coeffs(coeffs: &[Complex64]) -> Self {
        let mut log_mag = Vec::with_capacity(coeffs.len());
        let mut phase = Vec::with_capacity(coeffs.len());
        for c in coeffs {
            let r = c.norm();
            if r == 0.0 {
                log_mag.push(f64::NEG_INFINITY);
                phase.push(Complex64::new(1.0, 0.0));
            } else {
                log_mag.push(r.ln());
                phase.push(c / r);
            }
        }
        Self { log_mag, phase }
    }

    pub fn from_weyl(w: &WeylCoefficients) -> Self {
        Self { log_mag: w.log_magnitudes.clone(), phase: w.phases.clone() }
    }

    pub fn from_log_parts(log_mag: Vec<f64>, phase: Vec<Complex64>) -> Self {
        assert_eq!(log_mag.len(), phase.len());
        Self { log_mag, phase }
    }

    pub fn log_magnitudes(&self) -> &[f64] {
        &self.log_mag
    }

    /// Index of the highest nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        self.log_mag.iter().rposition(|l| l.is_finite())
    }

    /// `f(z)` in log scale.
    pub fn eval(&self, z: Complex64) -> LogValue {
        if z.re == 0.0 && z.im == 0.0 {
            return sum_log_terms(std::iter::once((self.log_mag[0], self.phase[0])));
        }
        let lr = z.norm().ln();
        let th = z.arg();
        let terms = self
            .log_mag
            .iter()
            .zip(&self.phase)
            .enumerate()
            .map(move |(k, (l, p))| (l + k as f64 * lr, p * Complex64::from_polar(1.0, k as f64 * th)));
        sum_log_terms(terms)
    }

    /// `f'(z)` in log scale.
    pub fn eval_derivative(&self, z: Complex64) -> LogValue {
        if self.log_mag.len() < 2 {
            return sum_log_terms(std::iter::empty::<(f64, Complex64)>());
        }
        if z.re == 0.0 && z.im == 0.0 {
            return sum_log_terms(std::iter::once((self.log_mag[1], self.phase[1])));
        }
        let lr = z.norm().ln();
        let th = z.arg();
        let terms = self.log_mag.iter().zip(&self.phase).enumerate().skip(1).map(move |(k, (l, p))| {
            let j = (k - 1) as f64;
            (l + (k as f64).ln() + j * lr, p * Complex64::from_polar(1.0, j * th))
        });
        sum_log_terms(terms)
    }

    /// Initial guesses on circles whose radii come from the upper convex hull
    /// of `(k, ln|a_k|)`.
    fn newton_polygon_guesses(&self, lo: usize, hi: usize) -> Vec<Complex64> {
        let pts: Vec<(usize, f64)> = (lo..=hi).filter(|&k| self.log_mag[k].is_finite()).map(|k| (k, self.log_mag[k])).collect();
        let mut hull: Vec<(usize, f64)> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let (x1, y1) = hull[hull.len() - 2];
                let (x2, y2) = hull[hull.len() - 1];
                // drop the middle point when it lies on or below the chord
                let cross = (x2 as f64 - x1 as f64) * (p.1 - y1) - (y2 - y1) * (p.0 as f64 - x1 as f64);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let mut out = Vec::with_capacity(hi - lo);
        for (e, w) in hull.windows(2).enumerate() {
            let (i, li) = w[0];
            let (j, lj) = w[1];
            let m = j - i;
            let r = ((li - lj) / m as f64).exp();
            let offset = 0.7 + 1.3 * e as f64;
            for q in 0..m {
                out.push(Complex64::from_polar(r, offset + TAU * q as f64 / m as f64));
            }
        }
        out
    }

    /// Coefficients of the trimmed polynomial divided by the leading one.
    fn monic_linear(&self, lo: usize, hi: usize) -> Vec<Complex64> {
        let lead_l = self.log_mag[hi];
        let lead_p = self.phase[hi];
        (lo..=hi).map(|k| self.phase[k] / lead_p * (self.log_mag[k] - lead_l).exp()).collect()
    }
}

/// Roots with their accuracy diagnostics.
#[derive(Debug, Clone)]
pub struct RootReport {
    pub roots: Vec<Complex64>,
    /// Largest `|f(root)| / Σ|a_k root^k|`.
    pub max_residual: f64,
    pub iterations: usize,
    pub used_companion: bool,
}

fn max_residual(p: &LogPoly, roots: &[Complex64]) -> f64 {
    roots.iter().map(|z| p.eval(*z).relative()).fold(0.0, f64::max)
}

fn aberth(p: &LogPoly, mut z: Vec<Complex64>) -> (Vec<Complex64>, usize) {
    let d = z.len();
    let mut done = vec![false; d];
    let tol = 4.0 * f64::EPSILON * d as f64;
    for it in 0..MAX_ITER {
        let mut all = true;
        for k in 0..d {
            if done[k] {
                continue;
            }
            let f = p.eval(z[k]);
            if f.log_abs == f64::NEG_INFINITY || f.relative() <= tol {
                done[k] = true;
                continue;
            }
            all = false;
            let fp = p.eval_derivative(z[k]);
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..d {
                if j != k {
                    s += (z[k] - z[j]).inv();
                }
            }
            let g = fp.phase / f.phase * (fp.log_abs - f.log_abs).exp();
            let denom = g - s;
            let step = if denom.norm() > 0.0 && denom.is_finite() {
                denom.inv()
            } else {
                Complex64::new(1e-3 * (1.0 + z[k].norm()), 0.0)
            };
            z[k] -= step;
            if step.norm() <= f64::EPSILON * z[k].norm() {
                done[k] = true;
            }
        }
        if all {
            return (z, it);
        }
    }
    (z, MAX_ITER)
}

/// All roots of `p`, with multiplicity. Leading zero coefficients are trimmed
/// (the degree drops) and trailing ones contribute roots at 0.
pub fn polynomial_roots(p: &LogPoly) -> Result<RootReport> {
    let hi = p.degree().ok_or_else(|| Error::InvalidArgument("all coefficients are zero".into()))?;
    let lo = p.log_mag.iter().position(|l| l.is_finite()).unwrap();
    if hi == 0 {
        return Err(Error::InvalidArgument("polynomial has degree 0 after trimming".into()));
    }
    let mut roots = vec![Complex64::new(0.0, 0.0); lo];
    if hi == lo {
        return Ok(RootReport { roots, max_residual: 0.0, iterations: 0, used_companion: false });
    }
    let trimmed = LogPoly {
        log_mag: p.log_mag[lo..=hi].to_vec(),
        phase: p.phase[lo..=hi].to_vec(),
    };
    let d = hi - lo;
    let init = trimmed.newton_polygon_guesses(0, d);
    let (mut z, iterations) = aberth(&trimmed, init);
    let mut res = max_residual(&trimmed, &z);
    let mut used_companion = false;
    if !(res <= RESIDUAL_TOL) && d <= COMPANION_MAX_DEGREE {
        let a = trimmed.monic_linear(0, d);
        let comp = CMatrix::from_fn(d, |i, j| {
            if i == 0 {
                -a[d - 1 - j]
            } else if j + 1 == i {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let ev = eigenvalues(&comp)?;
        let (polished, _) = aberth(&trimmed, ev);
        let r2 = max_residual(&trimmed, &polished);
        if r2 < res {
            z = polished;
            res = r2;
            used_companion = true;
        }
    }
    if !(res <= RESIDUAL_TOL) {
        return Err(Error::NoConvergence { what: "Aberth root finder", iterations });
    }
    roots.extend(z);
    Ok(RootReport { roots, max_residual: res, iterations, used_companion })
}

/// `ln(1 + max_{k<d} |a_k| / |a_d|)`: every root lies in the disk of this
/// log-radius (Cauchy / Rouché bound).
pub fn log_root_bound(p: &LogPoly) -> Option<f64> {
    let d = p.degree()?;
    if d == 0 {
        return None;
    }
    let ld = p.log_mag[d];
    let m = p.log_mag[..d].iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let t = m - ld;
    // ln(1 + e^t) without overflow
    Some(if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_weyl, EntryKind, EntryLaw};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn quadratic() {
        let r = polynomial_roots(&LogPoly::from_coeffs(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])).unwrap();
        let r = sorted(r.roots);
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn weyl_linear() {
        let w = WeylCoefficients::from_xi(vec![c(1.0, 0.0), c(1.0, 0.0)], EntryLaw::builtin(EntryKind::ComplexGaussian), 0).unwrap();
        let r = polynomial_roots(&LogPoly::from_weyl(&w)).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert!((r.roots[0] - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn tenth_roots_of_small_constant() {
        let mut a = vec![c(0.0, 0.0); 11];
        a[0] = c(-(2f64.powi(-10)), 0.0);
        a[10] = c(1.0, 0.0);
        let r = polynomial_roots(&LogPoly::from_coeffs(&a)).unwrap();
        assert_eq!(r.roots.len(), 10);
        assert!(r.max_residual <= RESIDUAL_TOL);
        for z in &r.roots {
            assert!((z.norm() - 0.5).abs() < 1e-12);
        }
        // distinct roots
        let s = sorted(r.roots);
        for w in s.windows(2) {
            assert!((w[0] - w[1]).norm() > 0.1);
        }
    }

    #[test]
    fn trimming_and_zero_roots() {
        // z (z - 2), with a zero leading coefficient
        let p = LogPoly::from_coeffs(&[c(0.0, 0.0), c(-2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let r = sorted(polynomial_roots(&p).unwrap().roots);
        assert_eq!(r.len(), 2);
        assert!(r[0].norm() < 1e-15);
        assert!((r[1] - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn all_zero_rejected() {
        assert!(polynomial_roots(&LogPoly::from_coeffs(&[c(0.0, 0.0); 3])).is_err());
        assert!(polynomial_roots(&LogPoly::from_coeffs(&[c(1.0, 0.0)])).is_err());
    }

    #[test]
    fn weyl_high_degree_roots() {
        let law = EntryLaw::builtin(EntryKind::ComplexGaussian);
        for (n, seed) in [(200usize, 5u64), (600, 6)] {
            let w = sample_weyl(n, &law, seed).unwrap();
            let p = LogPoly::from_weyl(&w);
            let r = polynomial_roots(&p).unwrap();
            assert_eq!(r.roots.len(), n);
            assert!(r.max_residual <= RESIDUAL_TOL, "{}", r.max_residual);
            let bound = log_root_bound(&p).unwrap().exp();
            assert!(r.roots.iter().all(|z| z.norm() <= bound));
            // the roots of f_n sum to -a_{n-1}/a_n
            let s: Complex64 = r.roots.iter().sum();
            let expect = -(w.phases[n - 1] / w.phases[n]) * (w.log_magnitudes[n - 1] - w.log_magnitudes[n]).exp();
            assert!((s - expect).norm() < 1e-6 * (1.0 + expect.norm()) * n as f64);
        }
    }

    #[test]
    fn eval_matches_horner() {
        let a = [c(1.0, -2.0), c(0.5, 0.0), c(0.0, 3.0), c(-1.0, 1.0)];
        let p = LogPoly::from_coeffs(&a);
        let z = c(0.3, -1.7);
        let h = a.iter().rev().fold(c(0.0, 0.0), |acc, x| acc * z + x);
        let v = p.eval(z);
        assert!((v.phase * v.log_abs.exp() - h).norm() < 1e-13 * h.norm());
        let dh = a.iter().enumerate().skip(1).rev().fold(c(0.0, 0.0), |acc, (k, x)| acc * z + x * k as f64);
        let dv = p.eval_derivative(z);
        assert!((dv.phase * dv.log_abs.exp() - dh).norm() < 1e-13 * dh.norm());
    }
}
