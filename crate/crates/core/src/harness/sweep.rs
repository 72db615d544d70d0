//! Rate sweeps over `n` and log-log slope fits.

use crate::discrepancy::{discrepancy_balls, discrepancy_bulk, kolmogorov_2d, DiscrepancyOpts, DiscrepancyReport, Witness};
use crate::ensembles::{mix64, sample_weyl, EnsembleSpec, EntryKind, EntryLaw};
use crate::error::{Error, Result};
use crate::harness::weyl::weyl_largest_root_guard;
use crate::spectra::{matrix_sample, weyl_roots_sample, SpectralSample};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

/// What each trial samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", content = "law", rename_all = "kebab-case")]
pub enum Source {
    /// Eigenvalues of `X/√n` with i.i.d. entries.
    Matrix(EntryLaw),
    /// Roots of the Weyl polynomial with coefficients `ξ_k`.
    Weyl(EntryLaw),
}

impl Source {
    pub fn ginibre() -> Self {
        Source::Matrix(EntryLaw::builtin(EntryKind::ComplexGaussian))
    }

    pub fn law(&self) -> &EntryLaw {
        match self {
            Source::Matrix(l) | Source::Weyl(l) => l,
        }
    }

    /// Sample for one trial.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SpectralSample> {
        match self {
            Source::Matrix(law) => {
                let spec = EnsembleSpec { kind: law.kind, n, seed, custom: law.custom.clone() };
                matrix_sample(&spec)
            }
            Source::Weyl(law) => {
                let w = sample_weyl(n, law, seed)?;
                let s = weyl_roots_sample(&w)?;
                let guard = weyl_largest_root_guard(&w)?;
                if !guard.contains(&s.points) {
                    return Err(Error::NoConvergence { what: "root finder (root outside the Rouché bound)", iterations: 0 });
                }
                Ok(s)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Balls,
    Bulk { tau: f64 },
    Kolmogorov2d,
}

impl Metric {
    pub fn evaluate(&self, sample: &SpectralSample, opts: &DiscrepancyOpts) -> Result<DiscrepancyReport> {
        match *self {
            Metric::Balls => discrepancy_balls(sample, opts),
            Metric::Bulk { tau } => discrepancy_bulk(sample, tau, opts),
            Metric::Kolmogorov2d => kolmogorov_2d(sample),
        }
    }

    /// Parse `balls`, `bulk` (with `tau`) or `kolmogorov2d`.
    pub fn parse(name: &str, tau: Option<f64>) -> Result<Self> {
        match name {
            "balls" => Ok(Metric::Balls),
            "bulk" => Ok(Metric::Bulk { tau: tau.unwrap_or(0.1) }),
            "kolmogorov2d" => Ok(Metric::Kolmogorov2d),
            other => Err(Error::InvalidSpec(format!("unknown metric {other:?}"))),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::parse(s, None)
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub source: Source,
    pub n_list: Vec<usize>,
    pub trials_per_n: usize,
    pub metric: Metric,
    #[serde(default)]
    pub opts: DiscrepancyOpts,
    pub base_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Write wall time in the `ms` column; when off the column is 0 and
    /// the whole file is reproducible.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(source: Source, n_list: Vec<usize>, trials_per_n: usize, metric: Metric, base_seed: u64) -> Self {
        Self {
            source,
            n_list,
            trials_per_n,
            metric,
            opts: DiscrepancyOpts::default(),
            base_seed,
            output: None,
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list[0] == 0 {
            return Err(Error::InvalidSpec("n_list must be non-empty with n >= 1".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec("n_list must be strictly increasing".into()));
        }
        if self.trials_per_n == 0 {
            return Err(Error::InvalidSpec("trials_per_n must be at least 1".into()));
        }
        if let Metric::Bulk { tau } = self.metric {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(Error::InvalidSpec(format!("bulk tau must lie in (0, 1), got {tau}")));
            }
        }
        self.source.law().validate()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

/// `base_seed ⊕ mix64(n << 32 | trial)`
pub fn trial_seed(base_seed: u64, n: usize, trial: usize) -> u64 {
    base_seed ^ mix64(((n as u64) << 32) | trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    /// Certified lower bound; NaN on an error row.
    pub value: f64,
    pub slack: f64,
    pub witness: Option<Witness>,
    pub ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRow {
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

/// One finished trial together with the sample it was computed on.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub row: SweepRow,
    pub sample: Option<SpectralSample>,
    pub report: Option<DiscrepancyReport>,
}

pub fn run_trial(config: &ExperimentConfig, n: usize, trial: usize) -> TrialOutcome {
    let seed = trial_seed(config.base_seed, n, trial);
    let start = Instant::now();
    let result = config
        .source
        .sample(n, seed)
        .and_then(|s| config.metric.evaluate(&s, &config.opts).map(|r| (s, r)));
    let ms = if config.record_timing { start.elapsed().as_millis() as u64 } else { 0 };
    match result {
        Ok((sample, report)) => TrialOutcome {
            row: SweepRow {
                n,
                trial,
                seed,
                value: report.lower,
                slack: report.slack(),
                witness: Some(report.witness),
                ms,
                error: None,
            },
            sample: Some(sample),
            report: Some(report),
        },
        Err(e) => {
            log::warn!("trial n={n} #{trial} failed: {e}");
            TrialOutcome {
                row: SweepRow {
                    n,
                    trial,
                    seed,
                    value: f64::NAN,
                    slack: f64::NAN,
                    witness: None,
                    ms,
                    error: Some(e.to_string()),
                },
                sample: None,
                report: None,
            }
        }
    }
}

/// Every `(n, trial)` in order, with samples kept for further analysis.
pub fn run_sweep_outcomes(config: &ExperimentConfig) -> Result<Vec<TrialOutcome>> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> =
        config.n_list.iter().flat_map(|&n| (0..config.trials_per_n).map(move |t| (n, t))).collect();
    Ok(jobs.par_iter().map(|&(n, t)| run_trial(config, n, t)).collect())
}

/// Run the sweep and, when the config names an output file, write the CSV.
pub fn run_rate_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let rows: Vec<SweepRow> = run_sweep_outcomes(config)?.into_iter().map(|o| o.row).collect();
    if let Some(path) = &config.output {
        write_sweep_file(path, &rows)?;
    }
    Ok(rows)
}

pub const SWEEP_HEADER: &str = "n,trial,seed,value,slack,witness_re,witness_im,witness_r,ms";

/// CSV body: header and one line per row. Corner witnesses leave
/// `witness_r` empty; error rows carry NaN values.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        let (wre, wim, wr) = match &r.witness {
            Some(Witness::Ball(b)) => (b.center.re.to_string(), b.center.im.to_string(), b.radius.to_string()),
            Some(Witness::Corner { corner, .. }) => (corner[0].to_string(), corner[1].to_string(), String::new()),
            None => ("NaN".into(), "NaN".into(), "NaN".into()),
        };
        writeln!(w, "{},{},{},{},{},{wre},{wim},{wr},{}", r.n, r.trial, r.seed, r.value, r.slack, r.ms)?;
    }
    Ok(())
}

/// `# generated unix=<seconds>` followed by the body, written to a sibling
/// temporary file and renamed into place.
pub fn write_sweep_file(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut buf = format!("# generated unix={stamp}\n").into_bytes();
    write_sweep_csv(rows, &mut buf)?;
    let tmp = path.with_extension("csv.tmp");
    std::fs::write(&tmp, buf)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residuals.
    pub stderr: f64,
    pub r2: f64,
    /// `(n, mean value)` pairs the fit was computed from.
    pub means: Vec<(usize, f64)>,
}

/// Per-`n` means of the non-error rows, in increasing `n`.
pub fn per_n_means(rows: &[SweepRow]) -> Vec<(usize, f64)> {
    let mut ns: Vec<usize> = rows.iter().filter(|r| !r.is_error()).map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let v: Vec<f64> = rows.iter().filter(|r| r.n == n && !r.is_error()).map(|r| r.value).collect();
            (n, v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect()
}

/// Least squares of `ln mean` against `ln n`.
pub fn fit_slope(rows: &[SweepRow]) -> Result<SlopeFit> {
    let means = per_n_means(rows);
    if means.len() < 3 {
        return Err(Error::InvalidArgument(format!("slope fit needs at least 3 distinct n, got {}", means.len())));
    }
    if means.iter().any(|&(_, m)| !(m > 0.0) || !m.is_finite()) {
        return Err(Error::InvalidArgument("slope fit needs positive finite means".into()));
    }
    let xs: Vec<f64> = means.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|&(_, m)| m.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (sse / (k - 2.0) / sxx).sqrt();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(SlopeFit { slope, intercept, stderr, r2, means })
}

/// Rows with `n ≥ min_n` whose slack exceeds half their value.
pub fn hygiene_violations(rows: &[SweepRow], min_n: usize) -> Vec<&SweepRow> {
    rows.iter().filter(|r| !r.is_error() && r.n >= min_n && !(r.slack <= 0.5 * r.value)).collect()
}

/// Number of `n` where the mean increases over the previous `n`.
pub fn mean_inversions(rows: &[SweepRow]) -> usize {
    per_n_means(rows).windows(2).filter(|w| w[1].1 > w[0].1).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, value: f64) -> SweepRow {
        SweepRow { n, trial: 0, seed: 0, value, slack: 0.0, witness: None, ms: 0, error: None }
    }

    #[test]
    fn smoke_sweep() {
        let mut cfg = ExperimentConfig::new(Source::ginibre(), vec![8], 2, Metric::Balls, 3);
        cfg.record_timing = false;
        let rows = run_rate_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.value > 0.0 && r.value < 1.0 && r.slack >= 0.0);
        }
        assert_ne!(rows[0].seed, rows[1].seed);
    }

    #[test]
    fn csv_is_reproducible() {
        let dir = std::env::temp_dir().join(format!("circlaw-sweep-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut cfg = ExperimentConfig::new(Source::ginibre(), vec![6, 10], 2, Metric::Kolmogorov2d, 9);
        cfg.record_timing = false;
        let mut bodies = Vec::new();
        for k in 0..2 {
            cfg.output = Some(dir.join(format!("run{k}.csv")));
            run_rate_sweep(&cfg).unwrap();
            let text = std::fs::read_to_string(cfg.output.as_ref().unwrap()).unwrap();
            let (stamp, body) = text.split_once('\n').unwrap();
            assert!(stamp.starts_with("# generated"));
            assert!(body.starts_with(SWEEP_HEADER));
            assert_eq!(body.lines().count(), 5);
            bodies.push(body.to_string());
        }
        assert_eq!(bodies[0], bodies[1]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let again = pool.install(|| run_rate_sweep(&ExperimentConfig { output: None, ..cfg.clone() }).unwrap());
        let mut buf = Vec::new();
        write_sweep_csv(&again, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), bodies[0]);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn error_rows_do_not_stop_the_sweep() {
        let bad_law = EntryLaw::custom(crate::ensembles::DiscreteLaw { atoms: vec![], weights: vec![] });
        let cfg = ExperimentConfig::new(Source::Matrix(bad_law), vec![4], 1, Metric::Balls, 0);
        assert!(matches!(run_rate_sweep(&cfg), Err(Error::InvalidSpec(_))));
        // a metric that fails inside the trial yields an error row
        let mut cfg = ExperimentConfig::new(Source::ginibre(), vec![4], 1, Metric::Bulk { tau: 2.0 }, 0);
        cfg.record_timing = false;
        let out = run_trial(&cfg, 4, 0);
        assert!(out.row.is_error() && out.row.value.is_nan() && out.sample.is_none());
        let mut buf = Vec::new();
        write_sweep_csv(&[out.row.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with(&format!("4,0,{},NaN,NaN,NaN,NaN,NaN,0\n", out.row.seed)), "{text}");
        let rows = vec![out.row, row(8, 0.2), row(16, 0.1), row(32, 0.05)];
        assert_eq!(per_n_means(&rows).len(), 3);
    }

    #[test]
    fn config_validation() {
        let ok = ExperimentConfig::new(Source::ginibre(), vec![8, 16], 1, Metric::Balls, 0);
        assert!(ok.validate().is_ok());
        for bad in [
            ExperimentConfig { n_list: vec![16, 8], ..ok.clone() },
            ExperimentConfig { n_list: vec![], ..ok.clone() },
            ExperimentConfig { trials_per_n: 0, ..ok.clone() },
            ExperimentConfig { metric: Metric::Bulk { tau: 1.5 }, ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidSpec(_))));
        }
        let json = serde_json::to_string(&ok).unwrap();
        assert_eq!(ExperimentConfig::from_json(&json).unwrap(), ok);
        let weyl = r#"{"source":"weyl","law":{"kind":"complex-gaussian"},"n_list":[8],"trials_per_n":1,
                      "metric":{"bulk":{"tau":0.2}},"base_seed":1}"#;
        let c = ExperimentConfig::from_json(weyl).unwrap();
        assert!(matches!(c.source, Source::Weyl(_)) && c.record_timing);
        assert!(ExperimentConfig::from_json("{").is_err());
    }

    #[test]
    fn slope_of_synthetic_rows() {
        let rows: Vec<_> = [64, 128, 256, 512].iter().map(|&n| row(n, (n as f64).powf(-0.5))).collect();
        let f = fit_slope(&rows).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12 && f.r2 > 1.0 - 1e-12);
        let flat: Vec<_> = [10, 20, 40].iter().map(|&n| row(n, 0.3)).collect();
        assert!(fit_slope(&flat).unwrap().slope.abs() < 1e-15);
        assert!(fit_slope(&[row(10, 0.1), row(10, 0.2), row(10, 0.3)]).is_err());
        assert_eq!(mean_inversions(&rows), 0);
    }

    #[test]
    fn metric_names() {
        assert_eq!("balls".parse::<Metric>().unwrap(), Metric::Balls);
        assert_eq!(Metric::parse("bulk", Some(0.3)).unwrap(), Metric::Bulk { tau: 0.3 });
        assert!("disks".parse::<Metric>().is_err());
    }
}
