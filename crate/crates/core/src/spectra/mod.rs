//! Spectra of scaled matrices and roots of Weyl polynomials.

pub mod eigen;
pub mod roots;
pub mod svd;

pub use eigen::eigenvalues;
pub use roots::{log_root_bound, polynomial_roots, LogPoly, RootReport};
pub use svd::{log_abs_det, singular_values};

use crate::ensembles::{sample_matrix, sample_weyl, EnsembleSpec, EntryLaw, WeylCoefficients};
use crate::error::Result;
use crate::matrix::CMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Where the points of a sample came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum SampleMeta {
    Matrix(EnsembleSpec),
    Weyl { n: usize, law: EntryLaw, seed: u64 },
    /// Points supplied directly (tests, synthetic configurations).
    Explicit,
}

/// Uniform atomic measure on `points`, each of weight `1/len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    #[serde(with = "points_serde")]
    pub points: Vec<Complex64>,
    #[serde(default)]
    pub scale_applied: bool,
    pub meta: SampleMeta,
    pub seed: u64,
}

mod points_serde {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(pts: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<[f64; 2]> = pts.iter().map(|z| [z.re, z.im]).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let v: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl SpectralSample {
    pub fn from_points(points: Vec<Complex64>) -> Self {
        Self { points, scale_applied: true, meta: SampleMeta::Explicit, seed: 0 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// CSV with header `re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "re,im")?;
        for z in &self.points {
            writeln!(w, "{},{}", z.re, z.im)?;
        }
        Ok(())
    }
}

/// `X / √n` for the matrix of `spec`.
pub fn scaled_matrix(spec: &EnsembleSpec) -> Result<CMatrix> {
    let x = sample_matrix(spec)?;
    Ok(x.scaled(1.0 / (spec.n as f64).sqrt()))
}

/// Eigenvalues of `X / √n`.
pub fn matrix_sample(spec: &EnsembleSpec) -> Result<SpectralSample> {
    let m = scaled_matrix(spec)?;
    Ok(SpectralSample {
        points: eigenvalues(&m)?,
        scale_applied: true,
        meta: SampleMeta::Matrix(spec.clone()),
        seed: spec.seed,
    })
}

/// Roots of a sampled Weyl polynomial.
pub fn weyl_sample(n: usize, law: &EntryLaw, seed: u64) -> Result<(WeylCoefficients, SpectralSample)> {
    let w = sample_weyl(n, law, seed)?;
    let s = weyl_roots_sample(&w)?;
    Ok((w, s))
}

pub fn weyl_roots_sample(w: &WeylCoefficients) -> Result<SpectralSample> {
    let r = polynomial_roots(&LogPoly::from_weyl(w))?;
    Ok(SpectralSample {
        points: r.roots,
        scale_applied: true,
        meta: SampleMeta::Weyl { n: w.n, law: w.law.clone(), seed: w.seed },
        seed: w.seed,
    })
}

/// Singular values of `m - z I`, descending.
pub fn shifted_sv_sample(m: &CMatrix, z: Complex64) -> Result<Vec<f64>> {
    singular_values(&m.shifted(z))
}

/// Hilbert–Schmidt norm, an upper bound for the operator norm.
pub fn operator_norm_bound(m: &CMatrix) -> f64 {
    m.hs_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::EntryKind;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sample_trace_identity() {
        let spec = EnsembleSpec::new(EntryKind::ComplexGaussian, 50, 11);
        let m = scaled_matrix(&spec).unwrap();
        let s = matrix_sample(&spec).unwrap();
        let sum: Complex64 = s.points.iter().sum();
        assert!((sum - m.trace()).norm() <= 1e-8 * 50.0);
    }

    #[test]
    fn shifted_examples() {
        let z = c(1.0, 0.0);
        let s = shifted_sv_sample(&CMatrix::zeros(2), z).unwrap();
        assert!(s.iter().all(|x| (x - 1.0).abs() < 1e-15));
        let d = CMatrix::from_diagonal(&[c(2.0, 0.0), c(0.0, 0.0)]);
        let s = shifted_sv_sample(&d, z).unwrap();
        assert!(s.iter().all(|x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn shifted_mean_square_is_hs() {
        let m = scaled_matrix(&EnsembleSpec::new(EntryKind::ComplexGaussian, 100, 2)).unwrap();
        let s = shifted_sv_sample(&m, c(0.0, 0.0)).unwrap();
        let mean = s.iter().map(|x| x * x).sum::<f64>() / 100.0;
        let hs = m.hs_norm().powi(2) / 100.0;
        assert!((mean - hs).abs() <= 1e-10 * hs);
    }

    #[test]
    fn norm_bound_examples() {
        assert!((operator_norm_bound(&CMatrix::identity(9)) - 3.0).abs() < 1e-15);
        let u = [c(0.6, 0.0), c(0.0, 0.8)];
        let v = [c(0.0, 1.0), c(0.0, 0.0)];
        let r1 = CMatrix::from_fn(2, |i, j| u[i] * v[j].conj());
        assert!((operator_norm_bound(&r1) - 1.0).abs() < 1e-15);
        let m = scaled_matrix(&EnsembleSpec::new(EntryKind::UniformSquare, 50, 4)).unwrap();
        let b = operator_norm_bound(&m);
        assert!(eigenvalues(&m).unwrap().iter().all(|z| z.norm() <= b));
    }

    #[test]
    fn girko_identity_on_sample() {
        let spec = EnsembleSpec::new(EntryKind::RealGaussian, 60, 9);
        let m = scaled_matrix(&spec).unwrap();
        let s = matrix_sample(&spec).unwrap();
        for z in [c(0.3, 0.2), c(-1.1, 0.4), c(0.0, 2.0)] {
            if s.points.iter().any(|l| (l - z).norm() < 1e-6) {
                continue;
            }
            let a: f64 = -s.points.iter().map(|l| (l - z).norm().ln()).sum::<f64>() / 60.0;
            let b = -log_abs_det(&m.shifted(z)) / 60.0;
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn json_shape() {
        let s = SpectralSample {
            points: vec![c(1.0, -0.5)],
            scale_applied: true,
            meta: SampleMeta::Matrix(EnsembleSpec::new(EntryKind::ComplexGaussian, 1, 3)),
            seed: 3,
        };
        let j = s.to_json().unwrap();
        assert!(j.starts_with("{\"points\":[[1.0,-0.5]]"), "{j}");
        assert_eq!(SpectralSample::from_json(&j).unwrap(), s);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "re,im\n1,-0.5\n");
    }
}
