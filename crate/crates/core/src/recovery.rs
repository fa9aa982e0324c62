//! Unfolding of modulo samples.
//!
//! [`recover`] runs the carrier-aware recursion: with the normalized filter
//! `Ψ^N` (tap 0 equal to 1) the filtered folded signal at index `k` is
//! `(Ψ^N ∗ x)[k] - r[k]` once all earlier residuals have been corrected.
//! When the filtered signal is below `λ` the residual is read off as
//! `M(v) - v`, snapped to the `2λ` lattice and propagated forward.
//!
//! [`us_alg_recover`] is the classical finite-difference unfolding, kept as a
//! baseline.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filter::{
    build_psi_power, contraction_factor, normalize_for_recovery, shrinkage_bound, FilterTaps,
    DEFAULT_TAP_CAP,
};
use crate::modulo::{fold_complex, fold_scalar, FoldedSeries, ResidualSeries};
use crate::series::{peak_amplitude, ComplexSeries};

/// Everything the recursion needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryParams {
    pub lambda: f64,
    /// Carrier set Ω_C in rad/s.
    pub carriers: Vec<f64>,
    pub order: usize,
    /// Dynamic-range bound β ∈ 2λℤ with β ≥ ‖φ‖∞.
    pub beta: f64,
    pub sample_period: f64,
    /// Number of leading samples assumed fold-free.
    pub warmup: usize,
    pub tap_cap: usize,
}

impl RecoveryParams {
    /// Parameters with the default warm-up of `2·N·P` samples and β = 2λ.
    pub fn new(lambda: f64, carriers: Vec<f64>, order: usize, sample_period: f64) -> Self {
        let warmup = default_warmup(order, carriers.len());
        Self {
            lambda,
            carriers,
            order,
            beta: 2.0 * lambda,
            sample_period,
            warmup,
            tap_cap: DEFAULT_TAP_CAP,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_warmup(mut self, warmup: usize) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn with_tap_cap(mut self, cap: usize) -> Self {
        self.tap_cap = cap;
        self
    }

    pub fn band_count(&self) -> usize {
        self.carriers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid("threshold must be positive"));
        }
        if self.order == 0 {
            return Err(invalid("filter order must be at least 1"));
        }
        if self.carriers.is_empty() {
            return Err(invalid("carrier set is empty"));
        }
        let m = self.beta / (2.0 * self.lambda);
        if m < 1.0 - 1e-12 || (m - m.round()).abs() > 1e-9 * m.max(1.0) {
            return Err(invalid(format!(
                "β = {} is not a positive multiple of 2λ = {}",
                self.beta,
                2.0 * self.lambda
            )));
        }
        let taps = self.order * self.band_count();
        if taps > self.tap_cap {
            return Err(Error::TooManyTaps {
                taps,
                cap: self.tap_cap,
            });
        }
        Ok(())
    }

    /// Additionally checks the rate condition `T_S 2^{P-1} Ω_B e < 1`.
    pub fn validate_with_bandwidth(&self, halfwidth: f64) -> Result<()> {
        self.validate()?;
        if contraction_factor(self.band_count(), halfwidth, self.sample_period) >= 1.0 {
            return Err(Error::RateTooSlow {
                max_sample_period: 1.0
                    / (2f64.powi(self.band_count() as i32 - 1) * halfwidth * std::f64::consts::E),
            });
        }
        Ok(())
    }
}

/// `2·N·P`.
pub fn default_warmup(order: usize, band_count: usize) -> usize {
    2 * order * band_count
}

/// Per-run diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest componentwise filtered magnitude after correction.
    pub max_filtered: f64,
    /// Largest distance of a raw residual estimate from the `2λ` lattice.
    pub max_lattice_deviation: f64,
    pub order: usize,
    pub corrections: usize,
}

/// Output of an unfolding run.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult {
    pub recovered: ComplexSeries,
    pub residual: ResidualSeries,
    pub fold_indices: Vec<usize>,
    pub diagnostics: Diagnostics,
}

impl RecoveryResult {
    fn assemble(
        y: &FoldedSeries,
        residual: ResidualSeries,
        diagnostics: Diagnostics,
    ) -> Result<Self> {
        let lam = y.lambda();
        let recovered: Vec<Complex64> = y
            .samples()
            .iter()
            .enumerate()
            .map(|(k, &v)| v + residual.value(k, lam))
            .collect();
        let fold_indices = residual.fold_indices();
        Ok(Self {
            recovered: y.series().with_samples(recovered)?,
            residual,
            fold_indices,
            diagnostics,
        })
    }
}

/// Smallest `β ∈ 2λℤ` with `β ≥ φ_peak` and `β ≥ 2λ`.
pub fn choose_beta(phi_peak: f64, lambda: f64) -> f64 {
    let period = 2.0 * lambda;
    let m = (phi_peak / period).ceil().max(1.0);
    m * period
}

/// Smallest order satisfying
/// `N ≥ ⌈(log λ - log Pβ) / log(T_S P 2^{P-1} Ω_B e)⌉`, raised further if
/// needed until the shrinkage bound with `φ_peak = β` is at most `λ`.
pub fn choose_order(
    lambda: f64,
    beta: f64,
    band_count: usize,
    halfwidth: f64,
    sample_period: f64,
) -> Result<usize> {
    if band_count == 0 || !(lambda > 0.0) || !(beta > 0.0) || !(halfwidth > 0.0) {
        return Err(invalid("order selection needs positive λ, β, P and Ω_B"));
    }
    let p = band_count as f64;
    let base = sample_period * p * contraction_factor(band_count, halfwidth, 1.0);
    if base >= 1.0 {
        return Err(Error::RateTooSlow {
            max_sample_period: sample_period / base,
        });
    }
    let ratio = (lambda.ln() - (p * beta).ln()) / base.ln();
    let mut order = ((ratio - 1e-9).ceil().max(1.0)) as usize;
    // the bound carries a leading factor P not present in the closed form
    while shrinkage_bound(band_count, halfwidth, sample_period, order, beta)
        > lambda * (1.0 + 1e-12)
    {
        order += 1;
    }
    Ok(order)
}

/// Componentwise peak of `Ψ^N ∗ x` over the full-overlap region.
pub fn filtered_peak(x: &ComplexSeries, carriers: &[f64], order: usize) -> Result<f64> {
    let f = build_psi_power(carriers, x.sample_period(), order)?;
    Ok(f.filtered_peak(x))
}

/// Order chosen from a known signal (simulation only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderChoice {
    pub order: usize,
    /// Filtered peak of the chosen order divided by λ.
    pub peak_ratio: f64,
    /// Filtered peak / λ for every candidate order `1..=max_order`.
    pub candidates: Vec<f64>,
}

impl OrderChoice {
    pub fn admissible(&self) -> bool {
        self.peak_ratio < 1.0
    }
}

/// Picks an order from ground truth (simulation only).
///
/// With `Some(target)` this is the smallest `N` whose worst-case filtered
/// peak over `references` is at most `target·λ`; when no order qualifies, or
/// with `None`, it is the order minimizing the worst-case peak. Candidate
/// orders respect the tap cap.
pub fn select_order_empirical(
    references: &[&ComplexSeries],
    carriers: &[f64],
    lambda: f64,
    target: Option<f64>,
    tap_cap: usize,
) -> Result<OrderChoice> {
    let first = references
        .first()
        .ok_or_else(|| invalid("need at least one reference signal"))?;
    let max_order = tap_cap / carriers.len().max(1);
    if max_order == 0 {
        return Err(Error::TooManyTaps {
            taps: carriers.len(),
            cap: tap_cap,
        });
    }
    let mut candidates = Vec::with_capacity(max_order);
    for order in 1..=max_order {
        let f = build_psi_power(carriers, first.sample_period(), order)?;
        let worst = references
            .iter()
            .map(|x| f.filtered_peak(x))
            .fold(0.0, f64::max);
        candidates.push(worst / lambda);
    }
    let pick = candidates
        .iter()
        .position(|&r| target.is_some_and(|t| r <= t))
        .unwrap_or_else(|| {
            candidates
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |best, (i, &r)| {
                    if r < best.1 {
                        (i, r)
                    } else {
                        best
                    }
                })
                .0
        });
    Ok(OrderChoice {
        order: pick + 1,
        peak_ratio: candidates[pick],
        candidates,
    })
}

fn snap(v: f64, period: f64) -> i64 {
    (v / period).round() as i64
}

/// Unfolds `y` with the carrier-aware recursion.
///
/// The first `params.warmup` samples are taken as fold-free. Within the
/// warm-up, any index where the filtered signal would imply a fold is an
/// error: [`Error::OrderTooSmall`] when the filtered background before it was
/// already at least `λ/2`, [`Error::WarmupViolation`] otherwise.
pub fn recover(y: &FoldedSeries, params: &RecoveryParams) -> Result<RecoveryResult> {
    params.validate()?;
    if (y.lambda() - params.lambda).abs() > 1e-12 * params.lambda {
        return Err(invalid(format!(
            "threshold mismatch: samples use λ = {}, params λ = {}",
            y.lambda(),
            params.lambda
        )));
    }
    let filter = recovery_filter(params)?;
    let h = &filter.taps;
    let lam = params.lambda;
    let period = 2.0 * lam;
    let n = y.len();
    let span = filter.span();
    let ys = y.samples();

    let mut residual = ResidualSeries::zeros(n);
    let mut diag = Diagnostics {
        order: params.order,
        ..Diagnostics::default()
    };
    if n <= span {
        return RecoveryResult::assemble(y, residual, diag);
    }

    // y_Ψ[k] for k >= span; index shifted by `span`.
    let mut filtered = crate::filter::convolve_valid(ys, h);
    let mut background: f64 = 0.0;
    for k in span..n {
        let v = filtered[k - span];
        let rho = fold_complex(v, lam) - v;
        let (mr, mi) = (snap(rho.re, period), snap(rho.im, period));
        let magnitude = v.re.abs().max(v.im.abs());
        if k < params.warmup {
            if mr != 0 || mi != 0 {
                return Err(if k == span || background >= 0.5 * lam {
                    Error::OrderTooSmall {
                        index: k,
                        observed_max: background.max(magnitude),
                    }
                } else {
                    Error::WarmupViolation { index: k, magnitude }
                });
            }
            background = background.max(magnitude);
            diag.max_filtered = diag.max_filtered.max(magnitude);
            continue;
        }
        let dev = (rho.re - period * mr as f64)
            .abs()
            .max((rho.im - period * mi as f64).abs());
        diag.max_lattice_deviation = diag.max_lattice_deviation.max(dev);
        if mr != 0 || mi != 0 {
            residual.re[k] = mr;
            residual.im[k] = mi;
            diag.corrections += 1;
            let c = Complex64::new(mr as f64 * period, mi as f64 * period);
            let end = n.min(k + h.len());
            for (j, idx) in (k..end).enumerate() {
                filtered[idx - span] += c * h[j];
            }
        }
        let after = filtered[k - span];
        diag.max_filtered = diag.max_filtered.max(after.re.abs().max(after.im.abs()));
    }
    RecoveryResult::assemble(y, residual, diag)
}

/// Normalized `Ψ^N` used by [`recover`].
pub fn recovery_filter(params: &RecoveryParams) -> Result<FilterTaps> {
    normalize_for_recovery(&build_psi_power(
        &params.carriers,
        params.sample_period,
        params.order,
    )?)
}

/// Classical unfolding by finite differences: estimate `∇^N r` by folding
/// `∇^N y`, then integrate `N` times, re-snapping to `2λℤ` after each pass.
///
/// Assumes the first `N` samples are fold-free. Correct for slowly varying
/// (lowpass, oversampled) signals; generally wrong for modulated ones.
pub fn us_alg_recover(y: &FoldedSeries, lambda: f64, order: usize) -> Result<RecoveryResult> {
    if order == 0 {
        return Err(invalid("difference order must be at least 1"));
    }
    if !(lambda > 0.0) {
        return Err(invalid("threshold must be positive"));
    }
    let n = y.len();
    let period = 2.0 * lambda;
    let run = |component: &dyn Fn(&Complex64) -> f64| -> Vec<i64> {
        let mut d: Vec<f64> = y.samples().iter().map(component).collect();
        for _ in 0..order {
            for k in (1..n).rev() {
                d[k] -= d[k - 1];
            }
        }
        let mut m: Vec<i64> = d
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if k < order {
                    0
                } else {
                    snap(fold_scalar(v, lambda) - v, period)
                }
            })
            .collect();
        for _ in 0..order {
            let mut acc = 0i64;
            for v in m.iter_mut() {
                acc = acc.saturating_add(*v);
                *v = acc;
            }
        }
        m
    };
    let residual = ResidualSeries {
        re: run(&|z| z.re),
        im: run(&|z| z.im),
    };
    let corrections = residual.fold_count();
    RecoveryResult::assemble(
        y,
        residual,
        Diagnostics {
            order,
            corrections,
            ..Diagnostics::default()
        },
    )
}

/// Reconstruction error summary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// Mean of `|x - x̂|²`.
    pub mse: f64,
    /// `mse / mean |x|²`.
    pub nmse: f64,
    /// `max |x - x̂|`.
    pub max_err: f64,
}

pub fn mse(x: &ComplexSeries, estimate: &ComplexSeries) -> Result<ErrorMetrics> {
    if x.len() != estimate.len() {
        return Err(invalid("series lengths differ"));
    }
    let n = x.len() as f64;
    let mut sq = 0.0;
    let mut max_err: f64 = 0.0;
    for (a, b) in x.samples().iter().zip(estimate.samples()) {
        let e = (a - b).norm_sqr();
        sq += e;
        max_err = max_err.max(e.sqrt());
    }
    let mse = sq / n;
    let power = x.power();
    let nmse = if power > 0.0 {
        mse / power
    } else if mse == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(ErrorMetrics { mse, nmse, max_err })
}

/// Componentwise peak of a sample slice; convenience re-export for callers
/// working with raw filter outputs.
pub fn peak(samples: &[Complex64]) -> f64 {
    peak_amplitude(samples)
}
