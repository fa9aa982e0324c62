//! Seeded experiment runner: configuration, trial pipeline and reports.
//!
//! Every trial derives its seed from `(master seed, trial index)`, and the
//! worker pool only changes scheduling, so identical configs produce
//! byte-identical `results.csv` and `summary.json`.

pub mod config;
pub mod report;
pub mod run;

pub use config::{
    ExperimentConfig, ExperimentKind, FrontendConfig, MapConfig, OrderRule, RecoveryConfig,
    SignalConfig, SweepConfig, Thresholds,
};
pub use report::{emit_report, results_csv, summarize, Check, LevelSummary, Summary};
pub use run::{
    prepare_trial, run_experiment, run_feasibility_map, run_noise_sweep, run_noiseless_suite,
    run_quantized_hw, run_trial, trial_seed, Method, OrderSource, PreparedTrial, RunOutput, Status,
    TrialRecord,
};
