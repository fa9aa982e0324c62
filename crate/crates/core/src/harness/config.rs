//! Experiment configuration (TOML) and the built-in presets.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulo::{Channels, NoisePlacement};
use crate::planner::Span;
use crate::signal::LeadIn;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    NoiselessSuite,
    NoiseSweep,
    QuantizedHw,
    FeasibilityMap,
    SingleRun,
}

/// How the filter order is picked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderRule {
    /// Closed-form rule; falls back to `empirical` when the rate condition
    /// fails.
    #[default]
    Theory,
    /// Smallest order whose filtered peak on the (noisy) ground truth is at
    /// most `order_target·λ`; otherwise the best order if it stays below `λ`.
    Empirical,
    /// Per noise level, the order minimizing the worst filtered peak over all
    /// trials of that level.
    MinPeak,
    /// `recovery.order`.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    /// Number of carriers to draw (positive carriers when `real`).
    pub band_count: usize,
    /// Total width `f_B` of each band in Hz; the half-width is `f_B/2`.
    pub bandwidth_hz: f64,
    /// Fixed carriers in Hz. Overrides `carrier_range_hz`.
    #[serde(default)]
    pub carriers_hz: Option<Vec<f64>>,
    /// Carriers are drawn uniformly from this interval (Hz).
    #[serde(default)]
    pub carrier_range_hz: Option<[f64; 2]>,
    /// Expand each carrier `f` into the conjugate pair `±f`.
    #[serde(default)]
    pub real: bool,
    /// Amplitude scale per (positive) carrier, in carrier order.
    #[serde(default)]
    pub band_energies: Option<Vec<f64>>,
    pub components_per_band: usize,
    pub samples: usize,
    pub sample_period: f64,
    #[serde(default)]
    pub lead_in: Option<LeadIn>,
    /// Target componentwise peak `‖x‖∞` after normalization.
    pub peak: f64,
}

impl SignalConfig {
    /// Ω_B in rad/s.
    pub fn halfwidth(&self) -> f64 {
        PI * self.bandwidth_hz
    }

    /// Number of complex bands `P` after expansion of real pairs.
    pub fn complex_band_count(&self) -> usize {
        let n = self
            .carriers_hz
            .as_ref()
            .map_or(self.band_count, |c| c.len());
        if self.real {
            2 * n
        } else {
            n
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontendConfig {
    /// Fixed threshold λ. Takes precedence over `dynamic_range`.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// `λ = peak / dynamic_range`.
    #[serde(default)]
    pub dynamic_range: Option<f64>,
    #[serde(default)]
    pub bit_depth: Option<u32>,
    /// Noise level for single-level experiments.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub noise_placement: NoisePlacement,
    #[serde(default)]
    pub channels: Channels,
}

impl FrontendConfig {
    pub fn lambda_for(&self, peak: f64) -> Result<f64> {
        match (self.lambda, self.dynamic_range) {
            (Some(l), _) => Ok(l),
            (None, Some(dr)) if dr > 0.0 => Ok(peak / dr),
            _ => Err(Error::Config(
                "modulo: set either `lambda` or a positive `dynamic_range`".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryConfig {
    #[serde(default)]
    pub order_rule: OrderRule,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default = "default_order_target")]
    pub order_target: f64,
    #[serde(default)]
    pub warmup: Option<usize>,
    #[serde(default = "default_tap_cap")]
    pub tap_cap: usize,
    /// Difference orders tried by the baseline; empty disables it.
    #[serde(default)]
    pub baseline_orders: Vec<usize>,
    /// Offset (Hz) added to every carrier handed to the recovery; nonzero
    /// values produce a deliberately mis-specified filter.
    #[serde(default)]
    pub carrier_offset_hz: f64,
}

fn default_order_target() -> f64 {
    0.5
}

fn default_tap_cap() -> usize {
    crate::filter::DEFAULT_TAP_CAP
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            order_rule: OrderRule::Theory,
            order: None,
            order_target: default_order_target(),
            warmup: None,
            tap_cap: default_tap_cap(),
            baseline_orders: Vec::new(),
            carrier_offset_hz: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Noise levels in dB, processed in the given order.
    pub snr_db: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub bandwidth_hz: f64,
    pub f_upper_hz: Span,
    pub periods_s: Span,
}

/// Pass/fail thresholds; the exit code reflects all of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// A trial is exact when its NMSE is below this.
    #[serde(default = "default_exact_nmse")]
    pub exact_nmse: f64,
    /// A trial is degraded (rather than failed) when `mse ≤ this·peak²`.
    #[serde(default = "default_degraded")]
    pub degraded_mse_rel: f64,
    /// Minimum fraction of feasible suite trials that must be exact.
    #[serde(default = "default_success")]
    pub min_success_rate: f64,
    /// Levels at or above this SNR must average below `degraded_mse_rel`.
    #[serde(default = "default_stable_snr")]
    pub stable_snr_db: f64,
    /// Allowed violations of a monotone MSE trend across the sweep.
    #[serde(default = "default_inversions")]
    pub max_inversions: usize,
    /// Absolute MSE bound for the quantized run.
    #[serde(default = "default_hw_mse")]
    pub hw_max_mse: f64,
    /// Required ratio between the best baseline MSE and the proposed MSE.
    #[serde(default = "default_ratio")]
    pub baseline_ratio: f64,
}

fn default_exact_nmse() -> f64 {
    1e-18
}
fn default_degraded() -> f64 {
    1e-3
}
fn default_success() -> f64 {
    1.0
}
fn default_stable_snr() -> f64 {
    20.0
}
fn default_inversions() -> usize {
    1
}
fn default_hw_mse() -> f64 {
    1e-2
}
fn default_ratio() -> f64 {
    10.0
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            exact_nmse: default_exact_nmse(),
            degraded_mse_rel: default_degraded(),
            min_success_rate: default_success(),
            stable_snr_db: default_stable_snr(),
            max_inversions: default_inversions(),
            hw_max_mse: default_hw_mse(),
            baseline_ratio: default_ratio(),
        }
    }
}

/// A complete, self-describing experiment. Output location and worker count
/// are run options, not part of the config, so they never leak into results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub trials: usize,
    pub seed: u64,
    pub signal: SignalConfig,
    pub modulo: FrontendConfig,
    #[serde(default)]
    pub recovery: RecoveryConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub map: Option<MapConfig>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        let s = &self.signal;
        if self.kind != ExperimentKind::FeasibilityMap {
            if s.samples < 2 {
                return bad("signal.samples must be at least 2");
            }
            if !(s.sample_period > 0.0) || !(s.bandwidth_hz > 0.0) || !(s.peak > 0.0) {
                return bad("signal: sample_period, bandwidth_hz and peak must be positive");
            }
            match (&s.carriers_hz, s.carrier_range_hz) {
                (Some(c), _) if c.is_empty() => return bad("signal.carriers_hz is empty"),
                (None, None) => return bad("signal: set carriers_hz or carrier_range_hz"),
                (None, Some([lo, hi])) if !(lo < hi) => {
                    return bad("signal.carrier_range_hz must be increasing")
                }
                (None, Some(_)) if s.band_count == 0 => return bad("signal.band_count must be positive"),
                _ => {}
            }
            if let Some(e) = &s.band_energies {
                let n = s.carriers_hz.as_ref().map_or(s.band_count, |c| c.len());
                if e.len() != n {
                    return bad("signal.band_energies needs one entry per carrier");
                }
            }
            self.modulo.lambda_for(s.peak)?;
        }
        if self.recovery.order_rule == OrderRule::Fixed && self.recovery.order.is_none() {
            return bad("recovery.order is required for the fixed rule");
        }
        match self.kind {
            ExperimentKind::NoiseSweep if self.sweep.as_ref().is_none_or(|w| w.snr_db.is_empty()) => {
                bad("noise-sweep needs [sweep] snr_db levels")
            }
            ExperimentKind::FeasibilityMap if self.map.is_none() => bad("feasibility-map needs a [map] section"),
            _ => Ok(()),
        }
    }

    /// Fifty noiseless trials: six complex bands of width 400 Hz drawn over
    /// `[f_B, 12.5/T_S - f_B]` at `T_S = 25 µs`, `λ = ‖x‖∞/100`.
    pub fn noiseless_suite() -> Self {
        let ts = 2.5e-5;
        let fb = 400.0;
        Self {
            kind: ExperimentKind::NoiselessSuite,
            trials: 50,
            seed: 1,
            signal: SignalConfig {
                band_count: 6,
                bandwidth_hz: fb,
                carriers_hz: None,
                carrier_range_hz: Some([fb, 12.5 / ts - fb]),
                real: false,
                band_energies: None,
                components_per_band: 20,
                samples: 4096,
                sample_period: ts,
                lead_in: Some(LeadIn {
                    quiet: 4e-3,
                    ramp: 10e-3,
                }),
                peak: 1.0,
            },
            modulo: FrontendConfig {
                lambda: None,
                dynamic_range: Some(100.0),
                bit_depth: None,
                snr_db: None,
                noise_placement: NoisePlacement::PreFold,
                channels: Channels::Complex,
            },
            recovery: RecoveryConfig::default(),
            sweep: None,
            map: None,
            thresholds: Thresholds::default(),
        }
    }

    /// Real three-band signal at `f_s = 20 kHz`, carriers 9.7, 15.5 and
    /// 23.5 kHz, dynamic-range gain 6.6, noise added to the folded samples
    /// from 50 dB down to 5 dB.
    pub fn noise_sweep() -> Self {
        Self {
            kind: ExperimentKind::NoiseSweep,
            trials: 50,
            seed: 1,
            signal: SignalConfig {
                band_count: 3,
                bandwidth_hz: 200.0,
                carriers_hz: Some(vec![9.7e3, 15.5e3, 23.5e3]),
                carrier_range_hz: None,
                real: true,
                band_energies: None,
                components_per_band: 10,
                samples: 2048,
                sample_period: 1.0 / 20e3,
                lead_in: Some(LeadIn {
                    quiet: 0.01,
                    ramp: 0.04,
                }),
                peak: 1.0,
            },
            modulo: FrontendConfig {
                lambda: None,
                dynamic_range: Some(6.6),
                bit_depth: None,
                snr_db: None,
                noise_placement: NoisePlacement::PostFold,
                channels: Channels::RealOnly,
            },
            recovery: RecoveryConfig {
                order_rule: OrderRule::MinPeak,
                ..RecoveryConfig::default()
            },
            sweep: Some(SweepConfig {
                snr_db: (1..=10).rev().map(|i| 5.0 * i as f64).collect(),
            }),
            map: None,
            thresholds: Thresholds::default(),
        }
    }

    /// Simulated 7-bit converter with `λ = 0.43` on a real three-band signal
    /// with `‖x‖∞ = 5.91`, sampled at `T_S = 1.3 ms`.
    pub fn quantized_hw() -> Self {
        Self {
            kind: ExperimentKind::QuantizedHw,
            trials: 1,
            seed: 1,
            signal: SignalConfig {
                band_count: 3,
                bandwidth_hz: 22.04,
                carriers_hz: Some(vec![25.64, 79.77, 182.34]),
                carrier_range_hz: None,
                real: true,
                band_energies: Some(vec![1.0, 0.5, 0.25]),
                components_per_band: 12,
                samples: 1024,
                sample_period: 1.3e-3,
                lead_in: Some(LeadIn {
                    quiet: 0.05,
                    ramp: 0.3,
                }),
                peak: 5.91,
            },
            modulo: FrontendConfig {
                lambda: Some(0.43),
                dynamic_range: None,
                bit_depth: Some(7),
                snr_db: None,
                noise_placement: NoisePlacement::PreFold,
                channels: Channels::RealOnly,
            },
            recovery: RecoveryConfig {
                baseline_orders: vec![1, 2, 3],
                ..RecoveryConfig::default()
            },
            sweep: None,
            map: None,
            thresholds: Thresholds::default(),
        }
    }

    /// Achievability over `f_U ∈ [25, 500] Hz` and `T_S ∈ (0, 12] ms` for a
    /// 22.04 Hz wide band.
    pub fn feasibility_map() -> Self {
        let mut cfg = Self::quantized_hw();
        cfg.kind = ExperimentKind::FeasibilityMap;
        cfg.map = Some(MapConfig {
            bandwidth_hz: 22.04,
            f_upper_hz: Span::new(25.0, 500.0, 200),
            periods_s: Span::new(5e-5, 1.2e-2, 240),
        });
        cfg
    }

    pub fn preset(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::NoiselessSuite => Self::noiseless_suite(),
            ExperimentKind::NoiseSweep => Self::noise_sweep(),
            ExperimentKind::QuantizedHw => Self::quantized_hw(),
            ExperimentKind::FeasibilityMap => Self::feasibility_map(),
            ExperimentKind::SingleRun => {
                let mut cfg = Self::noiseless_suite();
                cfg.kind = ExperimentKind::SingleRun;
                cfg.trials = 1;
                cfg
            }
        }
    }
}

/// Hz → rad/s.
pub fn hz_to_rad(f: f64) -> f64 {
    TAU * f
}
