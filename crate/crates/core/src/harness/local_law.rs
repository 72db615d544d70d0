//! Smooth linear statistics zoomed into a bulk point.

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOpts};
use crate::spectra::SpectralSample;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// `∫_0^1 e^{-1/u} du`
fn bump_moment() -> f64 {
    static M: OnceLock<f64> = OnceLock::new();
    *M.get_or_init(|| {
        let opts = QuadOpts { abs_tol: 1e-15, rel_tol: 1e-14, ..QuadOpts::default() };
        integrate(|u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 }, 0.0, 1.0, opts)
            .expect("smooth integrand")
            .value
    })
}

/// Radial profile `C e^{-1/(1-r²)}` on `r < 1` with unit integral over the plane.
pub fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    (-1.0 / (1.0 - r * r)).exp() / (PI * bump_moment())
}

/// Fraction of the circle `|w - z0| = t` inside the closed unit disk.
fn circle_fraction_inside(d: f64, t: f64) -> f64 {
    if t == 0.0 || d == 0.0 {
        return if d + t <= 1.0 { 1.0 } else { 0.0 };
    }
    let c = (1.0 - d * d - t * t) / (2.0 * d * t);
    if c >= 1.0 {
        1.0
    } else if c <= -1.0 {
        0.0
    } else {
        c.acos() / PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalLawReport {
    #[serde(with = "crate::reference::complex_pair")]
    pub z0: Complex64,
    pub s: f64,
    pub n: usize,
    /// `(1/n) Σ f_{z0}(λ_j)`
    pub empirical: f64,
    /// `∫ f_{z0} dμ∞`
    pub reference: f64,
    pub gap: f64,
}

/// Compare `(1/n) Σ f_{z0}(λ_j)` with `∫ f_{z0} dμ∞` for the zoomed bump
/// `f_{z0}(z) = n^{2s} f((z - z0) n^s)`. Requires `||z0| - 1| ≥ tau`.
pub fn local_law_probe(sample: &SpectralSample, z0: Complex64, s: f64, tau: f64) -> Result<LocalLawReport> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("local law probe needs atoms".into()));
    }
    if !(0.0..0.5).contains(&s) {
        return Err(Error::InvalidArgument(format!("zoom exponent must lie in [0, 1/2), got {s}")));
    }
    if !(tau > 0.0) || (1.0 - z0.norm()).abs() < tau {
        return Err(Error::InvalidArgument(format!("z0 = {z0} is within {tau} of the unit circle")));
    }
    let n = sample.len();
    let scale = (n as f64).powf(s);
    let empirical = sample.points.iter().map(|l| bump((l - z0).norm() * scale)).sum::<f64>() * scale * scale / n as f64;
    let d = z0.norm();
    let inv = 1.0 / scale;
    let reference = if d + inv <= 1.0 {
        1.0 / PI
    } else if d - inv >= 1.0 {
        0.0
    } else {
        // polar coordinates around z0 in units of the zoom
        let g = |r: f64| 2.0 * r * bump(r) * circle_fraction_inside(d, r * inv);
        let opts = QuadOpts { abs_tol: 1e-11, rel_tol: 1e-11, ..QuadOpts::default() };
        integrate(g, 0.0, 1.0, opts)?.value
    };
    Ok(LocalLawReport { z0, s, n, empirical, reference, gap: empirical - reference })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{EnsembleSpec, EntryKind};
    use crate::spectra::matrix_sample;

    #[test]
    fn bump_has_unit_mass() {
        // e^{-1} - E1(1)
        assert!((bump_moment() - 0.148_495_506_775_922_05).abs() < 1e-13);
        let opts = QuadOpts::default();
        let mass = integrate(|r| 2.0 * PI * r * bump(r), 0.0, 1.0, opts).unwrap().value;
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_edges() {
        let s = SpectralSample::from_points(vec![Complex64::new(0.0, 0.0)]);
        let r = local_law_probe(&s, Complex64::new(0.0, 0.0), 0.25, 0.1).unwrap();
        assert_eq!(r.reference, 1.0 / PI);
        assert!(local_law_probe(&s, Complex64::new(0.95, 0.0), 0.25, 0.1).is_err());
        assert!(local_law_probe(&s, Complex64::new(0.0, 0.0), 0.6, 0.1).is_err());
    }

    #[test]
    fn partial_overlap() {
        let s = SpectralSample::from_points(vec![Complex64::new(0.0, 0.0)]);
        let r = local_law_probe(&s, Complex64::new(1.0, 0.0), 0.49, 1e-9);
        assert!(r.is_err());
        let r = local_law_probe(&s, Complex64::new(1.02, 0.0), 0.0, 0.01).unwrap();
        assert!(r.reference > 0.0 && r.reference < 1.0 / PI);
    }

    #[test]
    fn outside_the_disk() {
        let s = matrix_sample(&EnsembleSpec::new(EntryKind::ComplexGaussian, 400, 1)).unwrap();
        let r = local_law_probe(&s, Complex64::new(2.0, 0.0), 0.3, 0.2).unwrap();
        assert_eq!(r.reference, 0.0);
        assert_eq!(r.empirical, 0.0);
    }

    #[test]
    fn global_statistic_is_close() {
        let s = matrix_sample(&EnsembleSpec::new(EntryKind::ComplexGaussian, 400, 2)).unwrap();
        let r = local_law_probe(&s, Complex64::new(0.0, 0.0), 0.0, 0.2).unwrap();
        assert!(r.gap.abs() < 0.01, "{r:?}");
    }

    #[test]
    fn zoomed_gap_within_envelope() {
        let n = 400;
        let s_exp = 0.25;
        let envelope = (n as f64).ln() * (n as f64).powf(-1.0 + 2.0 * s_exp);
        let hits = (0..50)
            .filter(|&t| {
                let s = matrix_sample(&EnsembleSpec::new(EntryKind::ComplexGaussian, n, 500 + t)).unwrap();
                local_law_probe(&s, Complex64::new(0.0, 0.0), s_exp, 0.2).unwrap().gap.abs() <= envelope
            })
            .count();
        assert!(hits >= 45, "{hits}/50");
    }
}
