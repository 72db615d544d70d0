//! Random matrices with i.i.d. entries and Weyl random polynomials.
//!
//! Every sampler is a pure function of `(law, size, seed)`. Randomness comes
//! from ChaCha8 with one stream per matrix row (or per block of audit
//! samples), so parallel sampling produces bit-identical output regardless of
//! scheduling.

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::special::ln_gamma;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

/// Environment variable consulted by [`default_seed`].
pub const SEED_ENV: &str = "CIRCLAW_SEED";
const FALLBACK_SEED: u64 = 0x5eed_c1c1_a770_0001;

/// Seed from `CIRCLAW_SEED`, or a fixed fallback when unset or unparsable.
pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(FALLBACK_SEED)
}

/// SplitMix64 finalizer; used to derive child seeds.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    /// Ginibre: Re and Im independent N(0, 1/2).
    ComplexGaussian,
    RealGaussian,
    /// Uniform on the square [-√(3/2), √(3/2)]².
    UniformSquare,
    /// (±1 ± i)/√2 with independent fair signs.
    RademacherComplex,
    /// A user-supplied finite law, see [`DiscreteLaw`].
    CustomIid,
}

impl EntryKind {
    pub fn is_builtin(self) -> bool {
        self != EntryKind::CustomIid
    }

    /// Whether the law is supported on the real line.
    pub fn is_real(self) -> bool {
        self == EntryKind::RealGaussian
    }
}

impl std::str::FromStr for EntryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidSpec(format!("unknown entry kind '{s}'")))
    }
}

/// Finite atomic law `sum_i w_i δ_{a_i}` for the `custom-iid` kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    pub atoms: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl DiscreteLaw {
    fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() || self.atoms.len() != self.weights.len() {
            return Err(Error::InvalidSpec("custom law needs matching atoms and weights".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidSpec("custom law weights must be finite and nonnegative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidSpec("custom law weights sum to zero".into()));
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Complex64 {
        let total: f64 = self.weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            if u < *w {
                return Complex64::new(a[0], a[1]);
            }
            u -= w;
        }
        let a = self.atoms[self.atoms.len() - 1];
        Complex64::new(a[0], a[1])
    }

    fn is_real(&self) -> bool {
        self.atoms.iter().all(|a| a[1] == 0.0)
    }
}

/// Entry law together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryLaw {
    pub kind: EntryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<DiscreteLaw>,
}

impl EntryLaw {
    pub fn builtin(kind: EntryKind) -> Self {
        Self { kind, custom: None }
    }

    pub fn custom(law: DiscreteLaw) -> Self {
        Self { kind: EntryKind::CustomIid, custom: Some(law) }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, &self.custom) {
            (EntryKind::CustomIid, Some(law)) => law.validate(),
            (EntryKind::CustomIid, None) => {
                Err(Error::InvalidSpec("custom-iid requires a 'custom' law".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn is_real(&self) -> bool {
        match &self.custom {
            Some(law) if self.kind == EntryKind::CustomIid => law.is_real(),
            _ => self.kind.is_real(),
        }
    }

    /// Draw one entry. The law must have passed [`EntryLaw::validate`].
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Complex64 {
        match self.kind {
            EntryKind::ComplexGaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
            }
            EntryKind::RealGaussian => Complex64::new(rng.sample(StandardNormal), 0.0),
            EntryKind::UniformSquare => {
                let half = 1.5f64.sqrt();
                Complex64::new(rng.random_range(-half..half), rng.random_range(-half..half))
            }
            EntryKind::RademacherComplex => {
                let bits: u8 = rng.random();
                let re = if bits & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                let im = if bits & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                Complex64::new(re, im)
            }
            EntryKind::CustomIid => self.custom.as_ref().expect("validated custom law").sample(rng),
        }
    }
}

/// JSON shape: `{"kind": "...", "n": 100, "seed": 7}` plus `"custom"` for
/// the `custom-iid` kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EntryKind,
    pub n: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<DiscreteLaw>,
}

impl EnsembleSpec {
    pub fn new(kind: EntryKind, n: usize, seed: u64) -> Self {
        Self { kind, n, seed, custom: None }
    }

    pub fn with_custom(law: DiscreteLaw, n: usize, seed: u64) -> Self {
        Self { kind: EntryKind::CustomIid, n, seed, custom: Some(law) }
    }

    pub fn law(&self) -> EntryLaw {
        EntryLaw { kind: self.kind, custom: self.custom.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("matrix dimension n must be at least 1".into()));
        }
        self.law().validate()
    }
}

/// Unscaled `n x n` matrix with i.i.d. entries; row `i` draws from stream `i`.
pub fn sample_matrix(spec: &EnsembleSpec) -> Result<CMatrix> {
    spec.validate()?;
    let n = spec.n;
    let law = spec.law();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(spec.seed, i as u64);
            (0..n).map(|_| law.sample(&mut rng)).collect()
        })
        .collect();
    Ok(CMatrix::from_row_major(n, rows.concat()))
}

/// Coefficients `c_k ξ_k` of a Weyl polynomial, stored as log-magnitude and
/// unit phase so that degrees in the thousands do not overflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylCoefficients {
    pub n: usize,
    /// `ln|c_k ξ_k|`, `-inf` where `ξ_k = 0`.
    pub log_magnitudes: Vec<f64>,
    pub phases: Vec<Complex64>,
    pub raw_xi: Vec<Complex64>,
    pub law: EntryLaw,
    pub seed: u64,
}

/// `ln c_k = (k ln n - ln k!) / 2` with `c_k = √(n^k / k!)`.
pub fn weyl_log_scale(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    0.5 * (k as f64 * (n as f64).ln() - ln_gamma(k as f64 + 1.0))
}

impl WeylCoefficients {
    /// Coefficients from explicit `ξ_0..ξ_n`.
    pub fn from_xi(xi: Vec<Complex64>, law: EntryLaw, seed: u64) -> Result<Self> {
        if xi.len() < 2 {
            return Err(Error::InvalidArgument("Weyl polynomial needs degree n >= 1".into()));
        }
        let n = xi.len() - 1;
        let mut log_magnitudes = Vec::with_capacity(n + 1);
        let mut phases = Vec::with_capacity(n + 1);
        for (k, x) in xi.iter().enumerate() {
            let r = x.norm();
            if r == 0.0 {
                log_magnitudes.push(f64::NEG_INFINITY);
                phases.push(Complex64::new(1.0, 0.0));
            } else {
                log_magnitudes.push(weyl_log_scale(n, k) + r.ln());
                phases.push(x / r);
            }
        }
        Ok(Self { n, log_magnitudes, phases, raw_xi: xi, law, seed })
    }

    /// `c_k ξ_k` reconstructed in linear scale; overflows for large `n`.
    pub fn coefficient(&self, k: usize) -> Complex64 {
        self.phases[k] * self.log_magnitudes[k].exp()
    }

    pub fn leading_nonzero(&self) -> Option<usize> {
        self.log_magnitudes.iter().rposition(|l| l.is_finite())
    }
}

/// Sample `ξ_0..ξ_n` i.i.d. from `law` on stream 0 of `seed`.
pub fn sample_weyl(n: usize, law: &EntryLaw, seed: u64) -> Result<WeylCoefficients> {
    if n == 0 {
        return Err(Error::InvalidSpec("Weyl degree n must be at least 1".into()));
    }
    law.validate()?;
    let mut rng = stream_rng(seed, 0);
    let xi: Vec<Complex64> = (0..=n).map(|_| law.sample(&mut rng)).collect();
    WeylCoefficients::from_xi(xi, law.clone(), seed)
}

/// One empirical moment against its target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentCheck {
    pub name: String,
    pub empirical: f64,
    pub target: f64,
    pub std_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentAudit {
    pub kind: EntryKind,
    pub num_samples: usize,
    pub checks: Vec<MomentCheck>,
    /// Empirical `E|X|^{4.5}`, the fixed-law stand-in for the finite
    /// `4+δ` moment requirement.
    pub moment_4_5: f64,
    /// Mean zero, unit variance and Gaussian moments up to third order all
    /// pass at 5 standard errors.
    pub condition_a: bool,
    /// Mean zero, unit variance and a finite `4+δ` moment.
    pub condition_b_fixed_law: bool,
}

const AUDIT_BLOCK: usize = 4096;
const AUDIT_SIGMAS: f64 = 5.0;

/// Empirical moment audit of the entry law at `num_samples` draws.
pub fn moment_audit(spec: &EnsembleSpec, num_samples: usize) -> Result<MomentAudit> {
    if num_samples < 10_000 {
        return Err(Error::InvalidArgument("moment audit needs at least 10^4 samples".into()));
    }
    let law = spec.law();
    law.validate()?;
    let blocks = num_samples.div_ceil(AUDIT_BLOCK);
    let draws: Vec<Complex64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = stream_rng(spec.seed, b as u64);
            let len = AUDIT_BLOCK.min(num_samples - b * AUDIT_BLOCK);
            let law = law.clone();
            (0..len).map(move |_| law.sample(&mut rng))
        })
        .collect();

    let real_split = law.is_real();
    let stats: [(&str, fn(Complex64) -> f64, f64); 7] = [
        ("E Re X", |x| x.re, 0.0),
        ("E Im X", |x| x.im, 0.0),
        ("E|X|^2", |x| x.norm_sqr(), 1.0),
        ("E (Re X)^3", |x| x.re.powi(3), 0.0),
        ("E (Im X)^3", |x| x.im.powi(3), 0.0),
        ("E (Re X)^2", |x| x.re * x.re, if real_split { 1.0 } else { 0.5 }),
        ("E (Im X)^2", |x| x.im * x.im, if real_split { 0.0 } else { 0.5 }),
    ];
    let nf = draws.len() as f64;
    let checks: Vec<MomentCheck> = stats
        .iter()
        .map(|(name, f, target)| {
            let mean = draws.iter().map(|x| f(*x)).sum::<f64>() / nf;
            let var = draws.iter().map(|x| (f(*x) - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            let std_err = (var / nf).sqrt();
            let pass = (mean - target).abs() <= AUDIT_SIGMAS * std_err + 1e-12;
            MomentCheck { name: name.to_string(), empirical: mean, target: *target, std_err, pass }
        })
        .collect();
    let moment_4_5 = draws.iter().map(|x| x.norm().powf(4.5)).sum::<f64>() / nf;
    let condition_a = checks.iter().all(|c| c.pass);
    let condition_b_fixed_law = checks[..3].iter().all(|c| c.pass) && moment_4_5.is_finite();
    Ok(MomentAudit {
        kind: spec.kind,
        num_samples,
        checks,
        moment_4_5,
        condition_a,
        condition_b_fixed_law,
    })
}
