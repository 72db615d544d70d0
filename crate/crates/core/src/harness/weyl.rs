//! Weyl polynomial experiments: the largest-root guard and the shift of the
//! log-potential.

use crate::ensembles::{stream_rng, EntryLaw, WeylCoefficients, sample_weyl};
use crate::error::{Error, Result};
use crate::potentials::{u_weyl, WEYL_SHIFT};
use crate::reference::u_inf;
use crate::spectra::{log_root_bound, LogPoly};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootGuard {
    /// Degree after trimming zero leading coefficients.
    pub degree: usize,
    pub log_bound: f64,
    /// `1 + max_{k<d} |a_k| / |a_d|`
    pub bound: f64,
}

impl RootGuard {
    pub fn contains(&self, roots: &[Complex64]) -> bool {
        roots.iter().all(|r| r.norm().ln() <= self.log_bound + 1e-12)
    }
}

/// Every root of the polynomial lies in the disk of radius `bound`.
pub fn weyl_largest_root_guard(coeffs: &WeylCoefficients) -> Result<RootGuard> {
    let p = LogPoly::from_weyl(coeffs);
    let degree = p.degree().ok_or_else(|| Error::InvalidArgument("zero polynomial".into()))?;
    let log_bound =
        log_root_bound(&p).ok_or_else(|| Error::InvalidArgument("constant polynomial has no roots".into()))?;
    Ok(RootGuard { degree, log_bound, bound: log_bound.exp() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylShiftReport {
    pub n: usize,
    pub seed: u64,
    /// Median of `U^W_n(z) - U∞(z)` over the probes.
    pub median: f64,
    pub target: f64,
    /// `5 / √n`
    pub tolerance: f64,
    pub within: bool,
    pub probes: usize,
    pub low_confidence: usize,
}

/// Median of `U^W_n(z) - U∞(z)` over `probes` points uniform on the annulus
/// `0.2 ≤ |z| ≤ 0.9`, compared with `-1/2`.
pub fn weyl_shift_check(n: usize, law: &EntryLaw, seed: u64, probes: usize) -> Result<WeylShiftReport> {
    if probes == 0 {
        return Err(Error::InvalidArgument("need at least one probe".into()));
    }
    let w = sample_weyl(n, law, seed)?;
    let p = LogPoly::from_weyl(&w);
    let mut rng = stream_rng(seed, 1);
    let (r0, r1) = (0.2f64, 0.9f64);
    let mut diffs = Vec::with_capacity(probes);
    let mut low_confidence = 0;
    for _ in 0..probes {
        let r = (r0 * r0 + rng.random::<f64>() * (r1 * r1 - r0 * r0)).sqrt();
        let z = Complex64::from_polar(r, 2.0 * PI * rng.random::<f64>());
        let v = p.eval(z);
        if v.relative() < crate::potentials::CANCELLATION_FLOOR {
            low_confidence += 1;
        }
        diffs.push(-v.log_abs / n as f64 - u_inf(z));
    }
    diffs.sort_unstable_by(f64::total_cmp);
    let k = diffs.len();
    let median = if k % 2 == 1 { diffs[k / 2] } else { 0.5 * (diffs[k / 2 - 1] + diffs[k / 2]) };
    let tolerance = 5.0 / (n as f64).sqrt();
    Ok(WeylShiftReport {
        n,
        seed,
        median,
        target: WEYL_SHIFT,
        tolerance,
        within: (median - WEYL_SHIFT).abs() <= tolerance,
        probes,
        low_confidence,
    })
}

/// `U^W_n(z) - U∞(z)` at one point.
pub fn weyl_shift_at(coeffs: &WeylCoefficients, z: Complex64) -> f64 {
    u_weyl(coeffs, z).value - u_inf(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::EntryKind;
    use crate::spectra::weyl_roots_sample;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn law() -> EntryLaw {
        EntryLaw::builtin(EntryKind::ComplexGaussian)
    }

    #[test]
    fn degree_one() {
        let w = WeylCoefficients::from_xi(vec![c(1.0, 0.0), c(1.0, 0.0)], law(), 0).unwrap();
        let g = weyl_largest_root_guard(&w).unwrap();
        assert!((g.bound - 2.0).abs() < 1e-14);
        assert!(g.contains(&[c(-1.0, 0.0)]));
    }

    #[test]
    fn z_squared_minus_one() {
        let w = WeylCoefficients::from_xi(vec![c(-1.0, 0.0), c(0.0, 0.0), c(0.5f64.sqrt(), 0.0)], law(), 0).unwrap();
        let g = weyl_largest_root_guard(&w).unwrap();
        assert!((g.bound - 2.0).abs() < 1e-14);
        assert!(g.contains(&[c(1.0, 0.0), c(-1.0, 0.0)]));
        assert!(!g.contains(&[c(2.5, 0.0)]));
    }

    #[test]
    fn trims_vanishing_leading_coefficient() {
        let w = WeylCoefficients::from_xi(vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], law(), 0).unwrap();
        let g = weyl_largest_root_guard(&w).unwrap();
        assert_eq!(g.degree, 1);
        let only_constant = WeylCoefficients::from_xi(vec![c(1.0, 0.0), c(0.0, 0.0)], law(), 0).unwrap();
        assert!(weyl_largest_root_guard(&only_constant).is_err());
    }

    #[test]
    fn sampled_roots_inside_guard() {
        let w = sample_weyl(200, &law(), 4).unwrap();
        let s = weyl_roots_sample(&w).unwrap();
        let g = weyl_largest_root_guard(&w).unwrap();
        assert_eq!(s.len(), 200);
        assert!(g.contains(&s.points));
    }

    #[test]
    fn shift_near_minus_half() {
        let r = weyl_shift_check(200, &law(), 10, 2000).unwrap();
        assert!(r.within, "{r:?}");
        assert_eq!(r.low_confidence, 0);
        let w = sample_weyl(200, &law(), 10).unwrap();
        assert!((weyl_shift_at(&w, c(0.5, 0.1)) + 0.5).abs() < 0.5);
    }
}
