//! Modulo acquisition and carrier-aware unfolding of multiband signals.
//!
//! The pipeline mirrors a folding converter: [`signal`] synthesizes a sum of
//! modulated bandlimited basebands, [`modulo`] folds it into `[-λ, λ)`,
//! [`filter`] builds the FIR filter that annihilates every carrier and
//! [`recovery`] uses it to unfold the samples. [`planner`] answers which
//! sampling periods are admissible and [`harness`] runs seeded experiments.

// `!(x > 0.0)` is used on purpose so that NaN is rejected along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod filter;
pub mod harness;
pub mod io;
pub mod modulo;
pub mod planner;
pub mod recovery;
pub mod series;
pub mod signal;

pub use error::{Error, Result};
pub use filter::{build_psi, build_psi_power, normalize_for_recovery, psi_power, FilterTaps};
pub use modulo::{fold_complex, fold_scalar, fold_series, FoldedSeries, ModuloConfig, ResidualSeries};
pub use recovery::{recover, us_alg_recover, RecoveryParams, RecoveryResult};
pub use series::{ComplexSeries, TimeGrid};
pub use signal::{synth_baseband, synth_multiband, MultibandSpec};
