//! Experiment orchestration behind the command line front end.

pub mod exact;
pub mod local_law;
pub mod sweep;
pub mod weyl;

pub use exact::{ginibre_exact_table, write_exact_csv, ExactRow};
pub use local_law::{bump, local_law_probe, LocalLawReport};
pub use sweep::{
    fit_slope, hygiene_violations, mean_inversions, per_n_means, run_rate_sweep, run_sweep_outcomes, run_trial,
    trial_seed, write_sweep_csv, write_sweep_file, ExperimentConfig, Metric, SlopeFit, Source, SweepRow,
    TrialOutcome, SWEEP_HEADER,
};
pub use weyl::{weyl_largest_root_guard, weyl_shift_check, RootGuard, WeylShiftReport};
