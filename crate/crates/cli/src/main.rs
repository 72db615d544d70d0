use circlaw::discrepancy::DiscrepancyOpts;
use circlaw::ensembles::{default_seed, EnsembleSpec, EntryKind, EntryLaw};
use circlaw::harness::{
    fit_slope, ginibre_exact_table, hygiene_violations, local_law_probe, run_rate_sweep, weyl_largest_root_guard,
    weyl_shift_check, write_exact_csv, write_sweep_csv, ExperimentConfig, Metric, Source,
};
use circlaw::limitlaw::{endpoints, girko_consistency, LimitSvLaw};
use circlaw::potentials::{smoothing_check, SmoothingParams, SmoothingVariant};
use circlaw::quadrature::QuadOpts;
use circlaw::spectra::{matrix_sample, weyl_sample, SpectralSample};
use circlaw::{Error, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "circlaw", version, about = "Rates of convergence to the circular law, measured")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Base seed; falls back to CIRCLAW_SEED, then a fixed value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SampleArgs {
    /// JSON file with an ensemble spec ({"kind", "n", "seed"[, "custom"]}).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Entry law, e.g. complex-gaussian, real-gaussian, uniform-square.
    #[arg(long, default_value = "complex-gaussian")]
    kind: String,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Roots of a Weyl polynomial instead of eigenvalues.
    #[arg(long)]
    weyl: bool,
    /// Read the sample from a JSON file written by `sample`.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct MetricArgs {
    /// balls, bulk or kolmogorov2d
    #[arg(long, default_value = "balls")]
    metric: String,
    /// Bulk margin: balls must lie in B_{1-tau}(0).
    #[arg(long)]
    tau: Option<f64>,
    /// Finest certificate cell side.
    #[arg(long)]
    grid_h: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a spectrum and print it as JSON (CSV when --out ends in .csv).
    Sample(SampleArgs),
    /// Certified discrepancy of a sampled spectrum.
    Discrepancy {
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Sweep over n and fit the log-log slope; rows go to --out as CSV.
    RateSweep {
        /// JSON experiment config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 128, 256])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long)]
        weyl: bool,
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Exact mean-Ginibre ball masses, discrepancies and bounds as CSV.
    GinibreExact {
        #[arg(long, value_delimiter = ',', default_values_t = [100u64, 1000, 10000])]
        n: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.9, 1.0])]
        radii: Vec<f64>,
    },
    /// Both sides of a smoothing inequality for one sample.
    SmoothingCheck {
        #[command(flatten)]
        sample: SampleArgs,
        /// global, local, kolmogorov or annular
        #[arg(long, default_value = "global")]
        variant: String,
        #[arg(long, default_value_t = 8.0)]
        p: f64,
        /// Smoothing scale; default √n.
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
    },
    /// Weyl polynomial: root guard, potential shift and discrepancy.
    Weyl {
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value = "complex-gaussian")]
        kind: String,
        #[arg(long, default_value_t = 2000)]
        probes: usize,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Limiting singular-value density of X/√n - z (CSV, or JSON for .json).
    LimitDensity {
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        re: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        im: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        /// Imaginary offset; exact boundary values when absent.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Zoomed smooth linear statistic around z0.
    LocalLaw {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        re: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        im: f64,
        /// Zoom exponent in [0, 1/2).
        #[arg(long, default_value_t = 0.25)]
        s: f64,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
    },
}

fn parse_kind(kind: &str) -> Result<EntryKind> {
    serde_json::from_value(serde_json::Value::String(kind.into()))
        .map_err(|_| Error::InvalidSpec(format!("unknown entry kind {kind:?}")))
}

fn read_config(path: &Path) -> Result<EnsembleSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidSpec(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))
}

fn load_sample(args: &SampleArgs, seed: u64) -> Result<SpectralSample> {
    if let Some(path) = &args.input {
        let text = std::fs::read_to_string(path)?;
        return SpectralSample::from_json(&text).map_err(|e| Error::InvalidSpec(e.to_string()));
    }
    if let Some(path) = &args.config {
        let spec = read_config(path)?;
        return matrix_sample(&spec);
    }
    let kind = parse_kind(&args.kind)?;
    if args.weyl {
        Ok(weyl_sample(args.n, &EntryLaw::builtin(kind), seed)?.1)
    } else {
        matrix_sample(&EnsembleSpec::new(kind, args.n, seed))
    }
}

fn metric_of(args: &MetricArgs) -> Result<(Metric, DiscrepancyOpts)> {
    let metric = Metric::parse(&args.metric, args.tau)?;
    let opts = DiscrepancyOpts { grid_h: args.grid_h, ..Default::default() };
    Ok((metric, opts))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn is_csv(out: &Option<PathBuf>) -> bool {
    out.as_ref().and_then(|p| p.extension()).is_some_and(|e| e == "csv")
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
    }
    let seed = cli.seed.unwrap_or_else(default_seed);
    let out = cli.out;
    match cli.command {
        Command::Sample(args) => {
            let s = load_sample(&args, seed)?;
            if is_csv(&out) {
                let mut buf = Vec::new();
                s.write_csv(&mut buf)?;
                emit(&out, &String::from_utf8_lossy(&buf))
            } else {
                emit(&out, &s.to_json()?)
            }
        }
        Command::Discrepancy { sample, metric } => {
            let s = load_sample(&sample, seed)?;
            let (metric, opts) = metric_of(&metric)?;
            emit(&out, &metric.evaluate(&s, &opts)?.to_json()?)
        }
        Command::RateSweep { config, n, trials, weyl, metric, tau } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::InvalidSpec(format!("cannot read {}: {e}", path.display())))?;
                    ExperimentConfig::from_json(&text)?
                }
                None => {
                    let law = EntryLaw::builtin(EntryKind::ComplexGaussian);
                    let source = if weyl { Source::Weyl(law) } else { Source::Matrix(law) };
                    ExperimentConfig::new(source, n, trials, Metric::Balls, seed)
                }
            };
            if cli.seed.is_some() {
                cfg.base_seed = seed;
            }
            if let Some(m) = metric {
                cfg.metric = Metric::parse(&m, tau)?;
            }
            if out.is_some() {
                cfg.output = out.clone();
            }
            let rows = run_rate_sweep(&cfg)?;
            if cfg.output.is_none() {
                let mut buf = Vec::new();
                write_sweep_csv(&rows, &mut buf)?;
                std::io::stdout().write_all(&buf)?;
            }
            let errors = rows.iter().filter(|r| r.is_error()).count();
            let fit = fit_slope(&rows).ok();
            let summary = serde_json::json!({
                "rows": rows.len(),
                "errors": errors,
                "hygiene_violations": hygiene_violations(&rows, 64).len(),
                "fit": fit,
            });
            eprintln!("{summary}");
            Ok(())
        }
        Command::GinibreExact { n, radii } => {
            let rows = ginibre_exact_table(&n, &radii)?;
            let mut buf = Vec::new();
            write_exact_csv(&rows, &mut buf)?;
            emit(&out, &String::from_utf8_lossy(&buf))
        }
        Command::SmoothingCheck { sample, variant, p, a, m, k, tau, eta } => {
            let s = load_sample(&sample, seed)?;
            let variant = match variant.as_str() {
                "global" => SmoothingVariant::Global,
                "local" => SmoothingVariant::Local { tau },
                "kolmogorov" => SmoothingVariant::Kolmogorov { tau },
                "annular" => SmoothingVariant::Annular { eta, center: [0.0, 0.0] },
                other => return Err(Error::InvalidSpec(format!("unknown smoothing variant {other:?}"))),
            };
            let a = a.unwrap_or((s.len() as f64).sqrt());
            let params = SmoothingParams { p, a, k, m, seed };
            let r = smoothing_check(&s, &params, variant, &DiscrepancyOpts::default())?;
            emit(&out, &r.to_json()?)
        }
        Command::Weyl { n, kind, probes, metric } => {
            let law = EntryLaw::builtin(parse_kind(&kind)?);
            let (coeffs, roots) = weyl_sample(n, &law, seed)?;
            let guard = weyl_largest_root_guard(&coeffs)?;
            let inside = guard.contains(&roots.points);
            if !inside {
                return Err(Error::NoConvergence { what: "root finder (root outside the Rouché bound)", iterations: 0 });
            }
            let shift = weyl_shift_check(n, &law, seed, probes)?;
            let (metric, opts) = metric_of(&metric)?;
            let report = metric.evaluate(&roots, &opts)?;
            let text = serde_json::json!({
                "guard": guard,
                "roots_inside_guard": inside,
                "shift": shift,
                "discrepancy": report,
            });
            emit(&out, &text.to_string())
        }
        Command::LimitDensity { re, im, points, eta } => {
            let z = Complex64::new(re, im);
            let law = LimitSvLaw::build(z, points, eta)?;
            let json = out.as_ref().and_then(|p| p.extension()).is_some_and(|e| e == "json");
            if json {
                emit(&out, &law.to_json()?)
            } else {
                let mut buf = Vec::new();
                law.write_csv(&mut buf)?;
                emit(&out, &String::from_utf8_lossy(&buf))?;
                let g = girko_consistency(z, QuadOpts::default())?;
                let (lo, hi) = endpoints(z);
                eprintln!("lambda_minus={lo} lambda_plus={hi} mass={} girko_gap={}", law.total_mass(), g.gap);
                Ok(())
            }
        }
        Command::LocalLaw { sample, re, im, s, tau } => {
            let smp = load_sample(&sample, seed)?;
            let r = local_law_probe(&smp, Complex64::new(re, im), s, tau)?;
            emit(&out, &serde_json::to_string(&r)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
