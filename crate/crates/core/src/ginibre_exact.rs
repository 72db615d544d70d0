//! Closed forms for the mean spectral measure of the Ginibre ensemble.
//!
//! With `x = nR²` and `r = R²` everything reduces to Poisson weights
//! `π_n(x) = e^{-x} x^n / n!` and the regularized incomplete gamma ratios.
//! The rate function is evaluated as a positive series multiplying `π_n(x)`
//! so that it keeps full relative accuracy deep in the bulk.

use crate::error::{Error, Result};
use crate::special::{ln_gamma, poisson_cdf_below, poisson_tail_from, poisson_weight};
use num_complex::Complex64;
use std::f64::consts::PI;

const SERIES_CAP: usize = 200_000;

fn check_n(n: u64) {
    assert!(n >= 1, "n must be at least 1");
}

/// `p_n(z) = Q(n, n|z|²) / π`.
pub fn mean_density(n: u64, z: Complex64) -> f64 {
    check_n(n);
    poisson_cdf_below(n, n as f64 * z.norm_sqr()) / PI
}

/// `μ̄_n(B_R(0))`.
pub fn mean_ball_mass_origin(n: u64, radius: f64) -> f64 {
    check_n(n);
    let r = radius * radius;
    if r <= 1.0 {
        let x = n as f64 * r;
        (poisson_tail_from(n + 1, x) + r * poisson_cdf_below(n, x)).min(1.0)
    } else {
        1.0 - dbar(n, radius)
    }
}

/// `μ∞(B_R(0)) - μ̄_n(B_R(0))`; nonnegative, maximal at `R = 1`.
pub fn dbar(n: u64, radius: f64) -> f64 {
    check_n(n);
    let r = radius * radius;
    let nf = n as f64;
    let x = nf * r;
    let pmf = poisson_weight(nf, x);
    if r == 1.0 || pmf == 0.0 {
        return pmf;
    }
    if r < 1.0 {
        // π_n(x) · r · Σ_j t_j (j+1)/(n+j+1),  t_0 = 1, t_{j+1} = t_j x/(n+j+1)
        let mut t = 1.0;
        let mut sum = 0.0;
        for j in 0..SERIES_CAP {
            let jf = j as f64;
            let term = t * (jf + 1.0) / (nf + jf + 1.0);
            sum += term;
            if term <= 1e-17 * sum && jf > x - nf {
                return pmf * r * sum;
            }
            t *= x / (nf + jf + 1.0);
        }
        // too close to R = 1 for the series; no cancellation risk there
        pmf - (1.0 - r) * poisson_tail_from(n, x)
    } else {
        // π_n(x) · Σ_{j=1}^{n} u_j j/n,  u_1 = n/x, u_{j+1} = u_j (n-j)/x
        let mut u = nf / x;
        let mut sum = 0.0;
        for j in 1..=n.min(SERIES_CAP as u64) {
            let term = u * j as f64 / nf;
            sum += term;
            if term <= 1e-17 * sum && (j as f64) > nf - x {
                return pmf * sum;
            }
            u *= (nf - j as f64) / x;
            if u == 0.0 {
                break;
            }
        }
        if n as usize > SERIES_CAP {
            return pmf - (r - 1.0) * poisson_cdf_below(n, x);
        }
        pmf * sum
    }
}

/// `n^n e^{-n} / n!`, the exact ball discrepancy of the mean Ginibre ESD.
pub fn lemma_rate(n: u64) -> f64 {
    check_n(n);
    poisson_weight(n as f64, n as f64)
}

/// `exp(-n(R² - 1 - ln R²)) / √n`.
pub fn bulk_bound(n: u64, radius: f64) -> Result<f64> {
    check_n(n);
    if !(radius > 0.0) || radius == 1.0 {
        return Err(Error::InvalidArgument(format!("bulk bound needs R > 0 and R != 1, got {radius}")));
    }
    Ok((-(n as f64) * bulk_exponent(radius) - 0.5 * (n as f64).ln()).exp())
}

/// `R² - 1 - ln R²`, the large-deviation exponent of the bulk bound.
pub fn bulk_exponent(radius: f64) -> f64 {
    let r = radius * radius;
    let u = r - 1.0;
    if u.abs() < 0.1 {
        // u - ln(1+u) = u²/2 - u³/3 + ...
        let mut s = 0.0;
        let mut p = u * u;
        for k in 2..40 {
            let term = p / k as f64;
            s += if k % 2 == 0 { term } else { -term };
            p *= u;
        }
        s
    } else {
        u - r.ln()
    }
}

/// Immutable per-`n` context with a log-factorial table.
#[derive(Debug, Clone)]
pub struct GinibreExactContext {
    pub n: u64,
    ln_factorial: Vec<f64>,
}

impl GinibreExactContext {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("n must be at least 1".into()));
        }
        let ln_factorial = (0..=n).map(|k| ln_gamma(k as f64 + 1.0)).collect();
        Ok(Self { n, ln_factorial })
    }

    /// `ln k!` for `k ≤ n`.
    pub fn ln_factorial(&self, k: u64) -> f64 {
        self.ln_factorial[k as usize]
    }

    pub fn density(&self, z: Complex64) -> f64 {
        mean_density(self.n, z)
    }

    pub fn ball_mass_origin(&self, radius: f64) -> f64 {
        mean_ball_mass_origin(self.n, radius)
    }

    pub fn dbar(&self, radius: f64) -> f64 {
        dbar(self.n, radius)
    }

    pub fn lemma_rate(&self) -> f64 {
        lemma_rate(self.n)
    }

    pub fn bulk_bound(&self, radius: f64) -> Result<f64> {
        bulk_bound(self.n, radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOpts};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn density_examples() {
        for n in [1, 7, 100, 100_000] {
            assert!(rel(mean_density(n, c(0.0, 0.0)), 1.0 / PI) < 1e-15);
        }
        for z in [c(0.3, 0.0), c(1.0, 1.0), c(0.0, 2.5)] {
            assert!(rel(mean_density(1, z), (-z.norm_sqr()).exp() / PI) < 1e-13);
        }
        // 50-digit oracle: Q(100, 400)/π
        let v = mean_density(100, c(2.0, 0.0));
        assert!(v <= 1e-30);
        assert!(rel(v, 3.483_502_889_797_608_9e-73) < 1e-10, "{v:e}");
    }

    #[test]
    fn ball_mass_examples() {
        assert_eq!(mean_ball_mass_origin(5, 0.0), 0.0);
        for r in [0.1, 0.7, 1.3, 2.0] {
            assert!((mean_ball_mass_origin(1, r) - (1.0 - (-r * r as f64).exp())).abs() < 1e-14);
        }
        assert!((mean_ball_mass_origin(50, 1.0) - (1.0 - lemma_rate(50))).abs() < 1e-15);
        assert!((mean_ball_mass_origin(30, 6.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ball_mass_is_integral_of_density() {
        let n = 12;
        for r in [0.4, 0.95, 1.2] {
            let q = integrate(|s| 2.0 * PI * s * mean_density(n, c(s, 0.0)), 0.0, r, QuadOpts::default()).unwrap();
            assert!((q.value - mean_ball_mass_origin(n, r)).abs() < 1e-10);
        }
    }

    #[test]
    fn lemma_rate_values() {
        // 50-digit oracle values of n^n e^{-n} / n!
        let table = [
            (1, 0.367_879_441_171_442_32),
            (2, 0.270_670_566_473_225_38),
            (5, 0.175_467_369_767_850_71),
            (50, 0.056_325_006_325_190_825),
            (500, 0.017_838_267_869_511_779),
            (5000, 0.005_641_801_804_664_022_6),
            (10_000, 0.003_989_389_558_962_825_6),
        ];
        for (n, v) in table {
            assert!(rel(lemma_rate(n), v) < 1e-14, "n={n}");
        }
        let ratio = lemma_rate(10_000) * (2.0 * PI * 1e4).sqrt();
        assert!((0.99999..=1.00001).contains(&ratio));
        for n in [2u64, 3, 10, 100, 1000] {
            let ratio = lemma_rate(n) * (2.0 * PI * n as f64).sqrt();
            assert!(ratio < 1.0 && ratio > 1.0 - 0.25 / n as f64);
        }
    }

    #[test]
    fn dbar_peak_is_lemma_rate() {
        for n in [5u64, 50, 500, 5000] {
            assert!(rel(dbar(n, 1.0), lemma_rate(n)) <= 1e-14);
        }
        assert_eq!(dbar(7, 0.0), 0.0);
    }

    #[test]
    fn dbar_oracle_and_bulk() {
        // 50-digit oracle
        assert!(rel(dbar(200, 0.7), 5.566_952_297_162_097_2e-22) < 1e-12);
        let b = bulk_bound(200, 0.7).unwrap();
        assert!(rel(b, 1.537_227_559_800_972_5e-19) < 1e-12);
        assert!(dbar(200, 0.7) <= b * 10.0);
        assert!((200.0 * bulk_exponent(0.7) - 40.67).abs() < 0.01);
    }

    #[test]
    fn dbar_argmax_is_one() {
        for n in [5u64, 50, 500] {
            let (mut best, mut arg) = (f64::MIN, 0.0);
            for i in 0..=30_000 {
                let r = i as f64 * 1e-4;
                let v = dbar(n, r);
                if v > best {
                    best = v;
                    arg = r;
                }
            }
            assert!((arg - 1.0).abs() <= 1e-4, "n={n} arg={arg}");
        }
    }

    #[test]
    fn dbar_matches_subtraction_formula() {
        // where cancellation is mild the two formulas agree
        for &(n, r) in &[(10u64, 0.8), (10, 1.3), (100, 0.97), (100, 1.05), (3, 2.0)] {
            let x = n as f64 * r * r;
            let pmf = poisson_weight(n as f64, x);
            let direct = if r < 1.0 {
                pmf - (1.0 - r * r) * poisson_tail_from(n, x)
            } else {
                pmf - (r * r - 1.0) * poisson_cdf_below(n, x)
            };
            assert!(rel(dbar(n, r), direct) < 1e-9, "n={n} r={r}");
        }
    }

    #[test]
    fn bulk_envelope_holds() {
        for n in [50u64, 100, 200, 500, 1000, 2000] {
            for i in 0..=45 {
                let eps = 0.05 + 0.01 * i as f64;
                for r in [1.0 - eps, 1.0 + eps] {
                    assert!(dbar(n, r) <= 10.0 * bulk_bound(n, r).unwrap(), "n={n} r={r}");
                }
                if eps <= 0.3 {
                    // 2ε² + 2ε³/3 + ... below one, 2ε² - 2ε³/3 + ε⁴/2 - ... above
                    assert!(bulk_exponent(1.0 - eps) >= 2.0 * eps * eps);
                    assert!(bulk_exponent(1.0 + eps) >= 2.0 * eps * eps - 2.0 * eps.powi(3) / 3.0);
                }
            }
        }
    }

    #[test]
    fn bulk_bound_degenerate_inputs() {
        assert!(bulk_bound(10, 0.0).is_err());
        assert!(bulk_bound(10, 1.0).is_err());
        assert!(rel(bulk_bound(16, 1.0 + 1e-9).unwrap(), 0.25) < 1e-9);
    }

    #[test]
    fn ball_mass_monotone() {
        let mut prev = 0.0;
        for i in 0..=400 {
            let m = mean_ball_mass_origin(40, i as f64 * 0.01);
            assert!(m >= prev - 1e-15);
            prev = m;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn context_delegates() {
        let ctx = GinibreExactContext::new(20).unwrap();
        assert!((ctx.ln_factorial(20) - 42.335_616_460_753_485).abs() < 1e-12);
        assert_eq!(ctx.lemma_rate(), lemma_rate(20));
        assert!(GinibreExactContext::new(0).is_err());
    }
}
