//! Limiting law of the symmetrized singular values of `X/√n - z`.
//!
//! Its Stieltjes transform `s(w) = ∫ dν(t) / (t - w)` is the root with
//! positive imaginary part of
//! `s³ + 2w s² + (w² - |z|² + 1) s + w = 0`,
//! i.e. of `s = -(s + w) / ((w + s)² - |z|²)`.

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOpts};
use crate::reference::u_inf;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

const FIXED_POINT_ITERS: usize = 10_000;
const DAMPING: f64 = 0.5;

/// `√(1 + 8|z|²)`
pub fn alpha(z: Complex64) -> f64 {
    (1.0 + 8.0 * z.norm_sqr()).sqrt()
}

/// Support edges `(λ_-, λ_+)` with
/// `λ_±² = (α ± 3)³ / (8(α ± 1))`, the lower one clamped at zero.
pub fn endpoints(z: Complex64) -> (f64, f64) {
    let a = alpha(z);
    let plus = ((a + 3.0).powi(3) / (8.0 * (a + 1.0))).sqrt();
    // α ≤ 3 exactly when |z| ≤ 1, where there is no gap
    let minus = if a <= 3.0 { 0.0 } else { ((a - 3.0).powi(3) / (8.0 * (a - 1.0))).sqrt() };
    (minus, plus)
}

fn cubic(z2: f64, w: Complex64) -> [Complex64; 4] {
    [w, w * w - z2 + 1.0, 2.0 * w, Complex64::new(1.0, 0.0)]
}

fn eval_cubic(c: &[Complex64; 4], s: Complex64) -> (Complex64, Complex64) {
    let v = ((s + c[2]) * s + c[1]) * s + c[0];
    let d = (3.0 * s + 2.0 * c[2]) * s + c[1];
    (v, d)
}

fn rhs(z2: f64, w: Complex64, s: Complex64) -> Complex64 {
    let t = w + s;
    -t / (t * t - z2)
}

/// `|s - RHS(s)|`
pub fn residual(z: Complex64, w: Complex64, s: Complex64) -> f64 {
    (s - rhs(z.norm_sqr(), w, s)).norm()
}

/// All three roots of the cubic, by Cardano and two Newton polishing steps.
pub fn cubic_roots(z: Complex64, w: Complex64) -> [Complex64; 3] {
    let c = cubic(z.norm_sqr(), w);
    let (b, cc, d) = (c[2], c[1], c[0]);
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    // pick the sign that avoids cancellation
    let (u1, u2) = (-q / 2.0 + disc, -q / 2.0 - disc);
    let u3 = if u1.norm() >= u2.norm() { u1 } else { u2 };
    let u = u3.cbrt();
    let omega = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    let mut uk = u;
    for r in roots.iter_mut() {
        let t = if uk.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { uk - p / (3.0 * uk) };
        *r = t - b / 3.0;
        uk *= omega;
    }
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let (v, dv) = eval_cubic(&c, *r);
            if dv.norm() > 0.0 {
                let step = v / dv;
                if step.is_finite() {
                    *r -= step;
                }
            }
        }
    }
    roots
}

/// Herglotz solution `s(z, w)` for `Im w > 0`: damped fixed-point iteration
/// from `s = i`, falling back to the closed-form roots.
pub fn stieltjes_fixed_point(z: Complex64, w: Complex64) -> Result<Complex64> {
    if !(w.im > 0.0) || !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::InvalidArgument(format!("need Im w > 0, got {w}")));
    }
    let z2 = z.norm_sqr();
    let mut s = Complex64::new(0.0, 1.0);
    for _ in 0..FIXED_POINT_ITERS {
        let next = (1.0 - DAMPING) * s + DAMPING * rhs(z2, w, s);
        let moved = (next - s).norm();
        s = next;
        if moved <= 1e-15 * s.norm().max(1.0) {
            break;
        }
    }
    if s.im > 0.0 && s.is_finite() && (s - rhs(z2, w, s)).norm() <= 1e-12 {
        return Ok(s);
    }
    cubic_roots(z, w)
        .into_iter()
        .filter(|r| r.im > 0.0 && r.is_finite())
        .min_by(|a, b| residual(z, w, *a).total_cmp(&residual(z, w, *b)))
        .ok_or(Error::NoHerglotzRoot { re: w.re, im: w.im })
}

/// `(1/π) Im s(z, x + iη)`.
pub fn sv_density(z: Complex64, x: f64, eta: f64) -> Result<f64> {
    if !(1e-6..=1e-2).contains(&eta) {
        return Err(Error::InvalidArgument(format!("eta must lie in [1e-6, 1e-2], got {eta}")));
    }
    Ok(stieltjes_fixed_point(z, Complex64::new(x, eta))?.im / PI)
}

/// Boundary value `(1/π) Im s(z, x + i0)`: for real `x` the cubic has real
/// coefficients, and inside the support the boundary value is the member of
/// its complex pair with positive imaginary part.
pub fn sv_density_boundary(z: Complex64, x: f64) -> f64 {
    let (lo, hi) = endpoints(z);
    let ax = x.abs();
    if ax >= hi || ax <= lo && lo > 0.0 {
        return 0.0;
    }
    let im = cubic_roots(z, Complex64::new(ax, 0.0)).iter().map(|r| r.im).fold(0.0, f64::max);
    im / PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSvLaw {
    #[serde(with = "crate::reference::complex_pair")]
    pub z: Complex64,
    pub alpha: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// `(x, ρ(x))` on a uniform grid over `[-λ_+, λ_+]` widened by 1%.
    pub density_grid: Vec<[f64; 2]>,
    /// Imaginary offset of the evaluation; zero for boundary values.
    pub eta_used: f64,
}

impl LimitSvLaw {
    /// Grid of `points` nodes (at least 3). With `eta = None` the density is
    /// the exact boundary value; otherwise `sv_density` at that offset.
    pub fn build(z: Complex64, points: usize, eta: Option<f64>) -> Result<Self> {
        if points < 3 {
            return Err(Error::InvalidArgument("density grid needs at least 3 points".into()));
        }
        let (lo, hi) = endpoints(z);
        let reach = 1.01 * hi;
        let step = 2.0 * reach / (points - 1) as f64;
        let xs: Vec<f64> = (0..points).map(|i| -reach + i as f64 * step).collect();
        let density_grid = xs
            .par_iter()
            .map(|&x| {
                // evaluate at |x| so the grid is exactly symmetric
                let rho = match eta {
                    None => sv_density_boundary(z, x.abs()),
                    Some(e) => sv_density(z, x.abs(), e)?,
                };
                Ok([x, rho])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { z, alpha: alpha(z), lambda_minus: lo, lambda_plus: hi, density_grid, eta_used: eta.unwrap_or(0.0) })
    }

    /// Trapezoid integral of the density grid.
    pub fn total_mass(&self) -> f64 {
        self.density_grid.windows(2).map(|w| 0.5 * (w[1][0] - w[0][0]) * (w[0][1] + w[1][1])).sum()
    }

    /// Cumulative trapezoid integral at each grid node.
    pub fn cdf_grid(&self) -> Vec<[f64; 2]> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.density_grid.len());
        for (i, p) in self.density_grid.iter().enumerate() {
            if i > 0 {
                let q = self.density_grid[i - 1];
                acc += 0.5 * (p[0] - q[0]) * (p[1] + q[1]);
            }
            out.push([p[0], acc]);
        }
        out
    }

    /// Piecewise linear interpolation of [`cdf_grid`](Self::cdf_grid).
    pub fn cdf(&self, x: f64) -> f64 {
        interpolate(&self.cdf_grid(), x)
    }

    /// CSV with header `x,rho`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,rho")?;
        for [x, r] in &self.density_grid {
            writeln!(w, "{x},{r}")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn interpolate(g: &[[f64; 2]], x: f64) -> f64 {
    let last = g[g.len() - 1];
    if x <= g[0][0] {
        return 0.0;
    }
    if x >= last[0] {
        return last[1];
    }
    let i = g.partition_point(|p| p[0] <= x);
    let (a, b) = (g[i - 1], g[i]);
    a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
}

/// Kolmogorov distance between the empirical law of `±σ_i` and the grid CDF.
pub fn empirical_sv_kolmogorov(law: &LimitSvLaw, singular_values: &[f64]) -> f64 {
    let mut xs: Vec<f64> = singular_values.iter().flat_map(|&s| [s, -s]).collect();
    xs.sort_unstable_by(f64::total_cmp);
    let m = xs.len() as f64;
    let grid = law.cdf_grid();
    let mut worst = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = interpolate(&grid, x);
        worst = worst.max((f - i as f64 / m).abs()).max((f - (i + 1) as f64 / m).abs());
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GirkoConsistency {
    /// `-∫ ln|x| dν(x)`
    pub lhs: f64,
    /// `U∞(z)`
    pub rhs: f64,
    pub gap: f64,
    /// Quadrature error estimate for `lhs`.
    pub error: f64,
}

const PUNCTURE: f64 = 1e-8;

/// `-2 ∫_{λ_-}^{λ_+} ln x ρ(x) dx` against `U∞(z)`, from the boundary
/// density, skipping `[0, 1e-8]`.
pub fn girko_consistency(z: Complex64, opts: QuadOpts) -> Result<GirkoConsistency> {
    let (lo, hi) = endpoints(z);
    let lo = lo.max(PUNCTURE);
    let f = |x: f64| x.ln() * sv_density_boundary(z, x);
    // near 0 integrate in x = e^{-u}, which turns the log into a polynomial weight
    let split = (0.5 * hi).min(1.0).max(lo);
    let near = if split > lo {
        let g = |u: f64| {
            let x = (-u).exp();
            -u * sv_density_boundary(z, x) * x
        };
        integrate(g, -split.ln(), -lo.ln(), opts)?
    } else {
        crate::quadrature::QuadResult { value: 0.0, error: 0.0, intervals: 0 }
    };
    let far = integrate(f, split, hi, opts)?;
    let lhs = -2.0 * (near.value + far.value);
    let rhs = u_inf(z);
    Ok(GirkoConsistency { lhs, rhs, gap: lhs - rhs, error: 2.0 * (near.error + far.error) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{stream_rng, EnsembleSpec, EntryKind};
    use crate::spectra::{scaled_matrix, shifted_sv_sample};
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn endpoint_examples() {
        assert_eq!(endpoints(c(0.0, 0.0)), (0.0, 2.0));
        let (lo, hi) = endpoints(c(0.0, 1.0));
        assert_eq!(lo, 0.0);
        assert!((hi - 1.5 * 3f64.sqrt()).abs() < 1e-14);
        let (lo, _) = endpoints(c(2.0, 0.0));
        let a = 33f64.sqrt();
        assert!((lo * lo - (a - 3.0).powi(3) / (8.0 * (a - 1.0))).abs() < 1e-14 && lo > 0.0);
    }

    #[test]
    fn semicircle_value_at_two_i() {
        let s = stieltjes_fixed_point(c(0.0, 0.0), c(0.0, 2.0)).unwrap();
        assert!((s - c(0.0, 2f64.sqrt() - 1.0)).norm() < 1e-10);
    }

    #[test]
    fn outside_support_is_nearly_real() {
        for x in [2.5, 3.0, 5.0] {
            let s = stieltjes_fixed_point(c(0.0, 0.0), c(x, 1e-9)).unwrap();
            assert!(s.im < 1e-8, "{x}: {s}");
        }
    }

    #[test]
    fn total_mass_at_infinity() {
        for z in [c(0.0, 0.0), c(0.7, 0.2), c(2.0, -1.0)] {
            let y = 1e6;
            let s = stieltjes_fixed_point(z, c(0.0, y)).unwrap();
            assert!((s * c(0.0, y) + 1.0).norm() < 1e-6, "{z}");
        }
    }

    #[test]
    fn herglotz_and_residual_sweep() {
        let mut rng = stream_rng(7, 0);
        for _ in 0..1000 {
            let z = c(rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5));
            let w = c(rng.random_range(-4.0..4.0), 10f64.powf(rng.random_range(-6.0..1.0)));
            let s = stieltjes_fixed_point(z, w).unwrap();
            assert!(s.im > 0.0, "{z} {w} {s}");
            assert!(residual(z, w, s) <= 1e-12 * s.norm().max(1.0), "{z} {w} {s} {}", residual(z, w, s));
        }
        assert!(stieltjes_fixed_point(c(0.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn density_examples() {
        let r0 = sv_density(c(0.0, 0.0), 0.0, 1e-6).unwrap();
        assert!((r0 - 1.0 / PI).abs() < 1e-5);
        assert!(sv_density(c(0.0, 0.0), 3.0, 1e-4).unwrap() <= 1e-4);
        let (lo, _) = endpoints(c(2.0, 0.0));
        assert!(sv_density(c(2.0, 0.0), 0.5 * lo, 1e-4).unwrap() <= 1e-3);
        assert!(sv_density(c(0.0, 0.0), 0.0, 1e-7).is_err());
        for x in [0.0f64, 0.5, 1.3, 1.9] {
            let exact = (4.0 - x * x).sqrt() / (2.0 * PI);
            assert!((sv_density_boundary(c(0.0, 0.0), x) - exact).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn grid_invariants() {
        for z in [c(0.0, 0.0), c(0.5, 0.0), c(0.0, 2.0)] {
            let law = LimitSvLaw::build(z, 4001, None).unwrap();
            let g = &law.density_grid;
            for i in 0..g.len() {
                let j = g.len() - 1 - i;
                assert!((g[i][1] - g[j][1]).abs() < 1e-8);
                let ax = g[i][0].abs();
                if g[i][1] >= 1e-6 {
                    assert!(ax <= law.lambda_plus * (1.0 + 1e-3) && ax >= law.lambda_minus * (1.0 - 1e-3));
                }
            }
            let mass = law.total_mass();
            assert!((0.999..=1.001).contains(&mass), "{z}: {mass}");
        }
        let smoothed = LimitSvLaw::build(c(0.5, 0.0), 401, Some(1e-4)).unwrap();
        assert_eq!(smoothed.eta_used, 1e-4);
        let mut out = Vec::new();
        smoothed.write_csv(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("x,rho\n"));
    }

    #[test]
    fn girko_examples() {
        for z in [c(0.0, 0.0), c(0.5, 0.0), c(0.0, 2.0), c(1.0, 0.0)] {
            let g = girko_consistency(z, QuadOpts::default()).unwrap();
            assert!(g.gap.abs() <= 1e-5, "{z}: {g:?}");
        }
        let g = girko_consistency(c(2.0, 0.0), QuadOpts::default()).unwrap();
        assert!((g.lhs + 2f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn empirical_singular_values_follow_the_law() {
        let m = scaled_matrix(&EnsembleSpec::new(EntryKind::ComplexGaussian, 400, 12)).unwrap();
        for z in [c(0.0, 0.0), c(0.5, 0.0), c(2.0, 0.0)] {
            let law = LimitSvLaw::build(z, 4001, None).unwrap();
            let sv = shifted_sv_sample(&m, z).unwrap();
            let d = empirical_sv_kolmogorov(&law, &sv);
            assert!(d <= 0.05, "{z}: {d}");
        }
    }
}
