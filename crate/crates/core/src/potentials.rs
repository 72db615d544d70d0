//! Logarithmic potentials of empirical measures and Weyl polynomials, the
//! deviation field `I(z) = |U_n(z) - U∞(z)|`, Monte-Carlo `L^p` norms of it,
//! and both sides of the smoothing inequalities.

use crate::discrepancy::{discrepancy_balls, discrepancy_bulk, kolmogorov_2d, DiscrepancyOpts};
use crate::ensembles::{stream_rng, WeylCoefficients};
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::reference::{mu_inf_ball, mu_inf_quadrant, mu_inf_shell_sup, u_inf, Ball};
use crate::spectra::{log_abs_det, LogPoly, SpectralSample};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// `U^W_n(z) - U∞(z)` concentrates at this value for Weyl polynomials.
pub const WEYL_SHIFT: f64 = -0.5;

/// Below this `|f| / Σ|terms|` a Weyl evaluation is flagged low-confidence.
pub const CANCELLATION_FLOOR: f64 = 1e-12;

/// `-(1/n) Σ ln|λ_j - z|`; `+∞` when `z` is an atom. NaN for an empty sample.
pub fn u_n_eigen(sample: &SpectralSample, z: Complex64) -> f64 {
    let mut acc = 0.0;
    for l in &sample.points {
        let d = (l - z).norm();
        if d == 0.0 {
            return f64::INFINITY;
        }
        acc += d.ln();
    }
    -acc / sample.len() as f64
}

/// `-(1/n) ln|det(M - z)|` for an already scaled `M`; `+∞` on a singular shift.
pub fn u_n_det(m: &CMatrix, z: Complex64) -> f64 {
    -log_abs_det(&m.shifted(z)) / m.dim() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylPotential {
    pub value: f64,
    /// The coefficient sum cancelled below [`CANCELLATION_FLOOR`] of its scale.
    pub low_confidence: bool,
}

/// `-(1/n) ln|Σ c_k ξ_k z^k|` evaluated in log scale.
pub fn u_weyl(coeffs: &WeylCoefficients, z: Complex64) -> WeylPotential {
    weyl_from_poly(&LogPoly::from_weyl(coeffs), coeffs.n, z)
}

fn weyl_from_poly(p: &LogPoly, n: usize, z: Complex64) -> WeylPotential {
    let v = p.eval(z);
    let value = if v.log_abs == f64::NEG_INFINITY { f64::INFINITY } else { -v.log_abs / n as f64 };
    WeylPotential { value, low_confidence: v.relative() < CANCELLATION_FLOOR }
}

/// `-(1/n) ln|c_d ξ_d|` for the leading nonzero coefficient: the potential of
/// the polynomial equals the potential of its roots plus this.
pub fn leading_shift(coeffs: &WeylCoefficients) -> f64 {
    match coeffs.leading_nonzero() {
        Some(d) => -coeffs.log_magnitudes[d] / coeffs.n as f64,
        None => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProbeSource {
    Eigen,
    Det,
    /// `u_ref` is `U∞(z) + shift`.
    Weyl { shift: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialProbe {
    #[serde(with = "crate::reference::complex_pair")]
    pub z: Complex64,
    pub u_n: f64,
    pub u_ref: f64,
    pub deviation: f64,
    pub source: ProbeSource,
}

impl PotentialProbe {
    fn new(z: Complex64, u_n: f64, source: ProbeSource) -> Self {
        let u_ref = match source {
            ProbeSource::Weyl { shift } => u_inf(z) + shift,
            _ => u_inf(z),
        };
        Self { z, u_n, u_ref, deviation: (u_n - u_ref).abs(), source }
    }

    pub fn eigen(sample: &SpectralSample, z: Complex64) -> Self {
        Self::new(z, u_n_eigen(sample, z), ProbeSource::Eigen)
    }

    pub fn det(m: &CMatrix, z: Complex64) -> Self {
        Self::new(z, u_n_det(m, z), ProbeSource::Det)
    }

    pub fn weyl(coeffs: &WeylCoefficients, z: Complex64) -> Self {
        Self::new(z, u_weyl(coeffs, z).value, ProbeSource::Weyl { shift: WEYL_SHIFT })
    }
}

/// CSV with header `re,im,u_n,u_ref,deviation`.
pub fn write_probe_csv<W: Write>(probes: &[PotentialProbe], mut w: W) -> Result<()> {
    writeln!(w, "re,im,u_n,u_ref,deviation")?;
    for p in probes {
        writeln!(w, "{},{},{},{},{}", p.z.re, p.z.im, p.u_n, p.u_ref, p.deviation)?;
    }
    Ok(())
}

/// Integration domain for [`mc_lp_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Disk { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
    /// `center + [-half, half]²`
    Square { center: [f64; 2], half: f64 },
}

impl Domain {
    pub fn disk(radius: f64) -> Self {
        Domain::Disk { center: [0.0, 0.0], radius }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Domain::Disk { radius, .. } => PI * radius * radius,
            Domain::Annulus { inner, outer, .. } => PI * (outer * outer - inner * inner),
            Domain::Square { half, .. } => 4.0 * half * half,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain::Disk { radius, .. } => radius > 0.0 && radius.is_finite(),
            Domain::Annulus { inner, outer, .. } => inner >= 0.0 && outer > inner && outer.is_finite(),
            Domain::Square { half, .. } => half > 0.0 && half.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("degenerate domain {self:?}")))
        }
    }

    /// Area-preserving image of the unit square.
    fn map(&self, u: f64, v: f64) -> Complex64 {
        match *self {
            Domain::Disk { center, radius } => {
                Complex64::new(center[0], center[1]) + Complex64::from_polar(radius * u.sqrt(), 2.0 * PI * v)
            }
            Domain::Annulus { center, inner, outer } => {
                let r = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
                Complex64::new(center[0], center[1]) + Complex64::from_polar(r, 2.0 * PI * v)
            }
            Domain::Square { center, half } => {
                Complex64::new(center[0] + half * (2.0 * u - 1.0), center[1] + half * (2.0 * v - 1.0))
            }
        }
    }
}

/// `S_m^{1/p}` with `S_m = (1/m) Σ I(z_j)^p` over uniform points `z_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpEstimate {
    pub p: f64,
    pub m: usize,
    pub value: f64,
    /// Largest field value among the samples.
    pub max: f64,
    /// Standard error of `S_m` itself (before the `1/p` power).
    pub std_error: f64,
    /// A sample point hit a singularity of the field.
    pub infinite: bool,
    pub domain: Domain,
    pub seed: u64,
}

impl LpEstimate {
    /// `‖I‖_{L^p(domain)}` from the average: `value · area^{1/p}`.
    pub fn norm(&self) -> f64 {
        self.value * self.domain.area().powf(1.0 / self.p)
    }
}

fn lp_from_points<F>(field: &F, points: &[Complex64], p: f64, domain: Domain, seed: u64) -> Result<LpEstimate>
where
    F: Fn(Complex64) -> f64 + Sync,
{
    let vals: Vec<f64> = points.par_iter().map(|&z| field(z)).collect();
    if vals.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::InvalidArgument("field must be nonnegative and not NaN".into()));
    }
    let m = vals.len();
    let max = vals.iter().copied().fold(0.0, f64::max);
    if max == f64::INFINITY {
        return Ok(LpEstimate {
            p,
            m,
            value: f64::INFINITY,
            max,
            std_error: f64::NAN,
            infinite: true,
            domain,
            seed,
        });
    }
    let powers: Vec<f64> = vals.iter().map(|v| v.powf(p)).collect();
    let mean = powers.iter().sum::<f64>() / m as f64;
    let var = if m > 1 { powers.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64 } else { 0.0 };
    // mean ≤ max^p holds exactly; the clamp only absorbs rounding in powf
    let value = mean.powf(1.0 / p).min(max);
    Ok(LpEstimate { p, m, value, max, std_error: (var / m as f64).sqrt(), infinite: false, domain, seed })
}

fn check_lp(p: f64, m: usize, domain: &Domain) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("p must be finite and at least 1, got {p}")));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one sample point".into()));
    }
    domain.validate()
}

/// Monte-Carlo estimate of the normalized `L^p` average of `field` over
/// `domain` from `m` i.i.d. uniform points. The points are drawn up front
/// from one stream of `seed`, so the result does not depend on the pool.
pub fn mc_lp_norm<F>(field: F, domain: &Domain, p: f64, m: usize, seed: u64) -> Result<LpEstimate>
where
    F: Fn(Complex64) -> f64 + Sync,
{
    check_lp(p, m, domain)?;
    let mut rng = stream_rng(seed, 0);
    let points: Vec<Complex64> = (0..m).map(|_| domain.map(rng.random(), rng.random())).collect();
    lp_from_points(&field, &points, p, *domain, seed)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Quasi-Monte-Carlo counterpart of [`mc_lp_norm`] on the Halton (2, 3) points.
pub fn qmc_lp_norm<F>(field: F, domain: &Domain, p: f64, m: usize) -> Result<LpEstimate>
where
    F: Fn(Complex64) -> f64 + Sync,
{
    check_lp(p, m, domain)?;
    let points: Vec<Complex64> =
        (1..=m as u64).map(|i| domain.map(radical_inverse(i, 2), radical_inverse(i, 3))).collect();
    lp_from_points(&field, &points, p, *domain, 0)
}

/// `n` points spread evenly over the unit disk along a golden-angle spiral.
pub fn quasi_uniform_disk(n: usize) -> Vec<Complex64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| Complex64::from_polar(((k as f64 + 0.5) / n as f64).sqrt(), golden * k as f64))
        .collect()
}

/// Which smoothing inequality to evaluate. The reference measure is always
/// the circular law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SmoothingVariant {
    /// Balls everywhere; `L^p` over `B_{K+1/a}(0)`, shells of width `1/a`.
    Global,
    /// Balls inside `B_{K-τ}(0)`; `L^p` over `B_K(0)`, shells of width `2/a`.
    Local { tau: f64 },
    /// Quadrants; `L^p` over `[-K-τ, K+τ]²`, three times the strip mass of width `2/a`.
    Kolmogorov { tau: f64 },
    /// Balls everywhere, with the potentials only compared on the annulus
    /// `B_{K+2/a}(z*) \ B_{η/a}(z*)`.
    Annular { eta: f64, center: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothingParams {
    pub p: f64,
    pub a: f64,
    pub k: f64,
    pub m: usize,
    pub seed: u64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self { p: 8.0, a: 2.0, k: 1.0, m: 100_000, seed: 0 }
    }
}

/// Right-hand side ingredients, without the absolute constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRhs {
    pub variant: SmoothingVariant,
    pub params: SmoothingParams,
    pub lp: LpEstimate,
    /// `a^{1+1/p} ‖U_μ - U∞‖_{L^p}`
    pub lp_term: f64,
    pub shell_term: f64,
    /// `[μ(V^c), ν(V^c)]`, zero outside the annular variant.
    pub leak_terms: [f64; 2],
    pub total: f64,
}

/// `sup_{s,t} μ∞(([s, s+w] × R) ∪ (R × [t, t+w]))`: grid search with local
/// refinement, as for the ball shells.
pub fn mu_inf_cross_sup(w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let f = |s: f64, t: f64| mu_inf_quadrant(s, t);
    let mass = |s: f64, t: f64| {
        let xs = f(s + w, 2.0) - f(s, 2.0);
        let ys = f(2.0, t + w) - f(2.0, t);
        let both = f(s + w, t + w) - f(s, t + w) - f(s + w, t) + f(s, t);
        xs + ys - both
    };
    let (lo, hi) = (-1.0 - w, 1.0);
    let steps = 100;
    let step = (hi - lo) / steps as f64;
    let (mut bs, mut bt, mut best) = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..=steps {
        for j in 0..=steps {
            let (s, t) = (lo + i as f64 * step, lo + j as f64 * step);
            let v = mass(s, t);
            if v > best {
                (bs, bt, best) = (s, t, v);
            }
        }
    }
    let mut h = step;
    while h > 1e-10 {
        let mut moved = false;
        for (ds, dt) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let v = mass(bs + ds, bt + dt);
            if v > best {
                (bs, bt, best) = (bs + ds, bt + dt, v);
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    best.clamp(0.0, 1.0)
}

fn check_smoothing(params: &SmoothingParams, variant: &SmoothingVariant) -> Result<()> {
    let SmoothingParams { p, a, k, .. } = *params;
    let bad = |msg: String| Err(Error::InvalidArgument(msg));
    if !(p >= 1.0) || !p.is_finite() {
        return bad(format!("p must be finite and at least 1, got {p}"));
    }
    if !(k > 0.0) || !k.is_finite() {
        return bad(format!("K must be positive, got {k}"));
    }
    match *variant {
        SmoothingVariant::Global => {
            if !(a >= 0.5) {
                return bad(format!("global variant needs a >= 1/2, got {a}"));
            }
            if k < 1.0 {
                return bad("global variant needs the unit disk inside B_K".into());
            }
        }
        SmoothingVariant::Local { tau } => {
            if !(a > 1.0) || !(tau > 0.0 && tau < k) {
                return bad(format!("local variant needs a > 1 and 0 < tau < K, got a = {a}, tau = {tau}"));
            }
        }
        SmoothingVariant::Kolmogorov { tau } => {
            if !(a > 1.0) || !(tau > 0.0) || k < 1.0 {
                return bad(format!("kolmogorov variant needs a > 1, tau > 0, K >= 1, got a = {a}, tau = {tau}"));
            }
        }
        SmoothingVariant::Annular { eta, .. } => {
            if !(a > 1.0) || !(eta >= 0.0) || 2.0 * eta / a >= k {
                return bad(format!("annular variant needs a > 1 and 0 <= 2 eta / a < K, got a = {a}, eta = {eta}"));
            }
        }
    }
    Ok(())
}

/// Evaluate every right-hand side term of the chosen smoothing inequality
/// for `μ` given by its atoms and potential, against `ν = μ∞`.
pub fn smoothing_rhs<F>(
    atoms: &[Complex64],
    u_mu: F,
    params: &SmoothingParams,
    variant: SmoothingVariant,
) -> Result<SmoothingRhs>
where
    F: Fn(Complex64) -> f64 + Sync,
{
    check_smoothing(params, &variant)?;
    let SmoothingParams { p, a, k, m, seed } = *params;
    let (domain, shell_term, leak_terms) = match variant {
        SmoothingVariant::Global => (Domain::disk(k + 1.0 / a), mu_inf_shell_sup(1.0 / a), [0.0, 0.0]),
        SmoothingVariant::Local { .. } => (Domain::disk(k), mu_inf_shell_sup(2.0 / a), [0.0, 0.0]),
        SmoothingVariant::Kolmogorov { tau } => {
            (Domain::Square { center: [0.0, 0.0], half: k + tau }, 3.0 * mu_inf_cross_sup(2.0 / a), [0.0, 0.0])
        }
        SmoothingVariant::Annular { eta, center } => {
            let c = Complex64::new(center[0], center[1]);
            let inner = 2.0 * eta / a;
            let outside = atoms
                .iter()
                .filter(|z| {
                    let d = (*z - c).norm();
                    d >= k || d < inner
                })
                .count();
            let mu_leak = if atoms.is_empty() { 0.0 } else { outside as f64 / atoms.len() as f64 };
            let nu_leak = 1.0 - mu_inf_ball(&Ball::new(c, k)) + mu_inf_ball(&Ball::new(c, inner));
            let domain = Domain::Annulus { center, inner: eta / a, outer: k + 2.0 / a };
            (domain, mu_inf_shell_sup(eta.max(2.0) / a), [mu_leak, nu_leak.clamp(0.0, 1.0)])
        }
    };
    let lp = mc_lp_norm(|z| (u_mu(z) - u_inf(z)).abs(), &domain, p, m, seed)?;
    let lp_term = a.powf(1.0 + 1.0 / p) * lp.norm();
    let total = lp_term + shell_term + leak_terms[0] + leak_terms[1];
    Ok(SmoothingRhs { variant, params: *params, lp, lp_term, shell_term, leak_terms, total })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    /// Certified lower bound of the matching discrepancy.
    pub lhs: f64,
    pub rhs: SmoothingRhs,
    /// `lhs / rhs.total`; `+∞` only when the total vanishes and `lhs > 0`.
    pub implied_constant: f64,
}

impl SmoothingReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Certified lower bound of the discrepancy the variant controls.
pub fn smoothing_lhs(
    sample: &SpectralSample,
    k: f64,
    variant: SmoothingVariant,
    opts: &DiscrepancyOpts,
) -> Result<f64> {
    Ok(match variant {
        SmoothingVariant::Global | SmoothingVariant::Annular { .. } => discrepancy_balls(sample, opts)?.lower,
        SmoothingVariant::Local { tau } => {
            let inner = k - tau;
            if !(inner > 0.0 && inner < 1.0) {
                return Err(Error::InvalidArgument(format!("local variant needs 0 < K - tau < 1, got {inner}")));
            }
            discrepancy_bulk(sample, 1.0 - inner, opts)?.lower
        }
        SmoothingVariant::Kolmogorov { .. } => kolmogorov_2d(sample)?.lower,
    })
}

/// Both sides for an already computed left-hand side. The empirical
/// potential comes from the atoms directly.
pub fn smoothing_check_with_lhs(
    lhs: f64,
    sample: &SpectralSample,
    params: &SmoothingParams,
    variant: SmoothingVariant,
) -> Result<SmoothingReport> {
    let rhs = smoothing_rhs(&sample.points, |z| u_n_eigen(sample, z), params, variant)?;
    let implied_constant = if rhs.total > 0.0 {
        lhs / rhs.total
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(SmoothingReport { lhs, rhs, implied_constant })
}

pub fn smoothing_check(
    sample: &SpectralSample,
    params: &SmoothingParams,
    variant: SmoothingVariant,
    opts: &DiscrepancyOpts,
) -> Result<SmoothingReport> {
    check_smoothing(params, &variant)?;
    let lhs = smoothing_lhs(sample, params.k, variant, opts)?;
    smoothing_check_with_lhs(lhs, sample, params, variant)
}
