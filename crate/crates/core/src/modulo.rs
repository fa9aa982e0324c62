//! Modulo front end: centered folding, noise, quantization and the residual
//! decomposition `x = y + r`, `r ∈ 2λℤ`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::ComplexSeries;

/// Centered modulo `v ↦ v - 2λ⌊(v + λ) / 2λ⌋`, range `[-λ, λ)`.
///
/// Inputs already inside `[-λ, λ)` are returned bit-for-bit, which makes the
/// map idempotent.
pub fn fold_scalar(v: f64, lambda: f64) -> f64 {
    if (-lambda..lambda).contains(&v) {
        return v;
    }
    let period = 2.0 * lambda;
    let m = ((v + lambda) / period).floor();
    let mut r = (-period).mul_add(m, v);
    // one-step repair when rounding lands on the wrong side of a boundary
    if r >= lambda {
        r -= period;
    } else if r < -lambda {
        r += period;
    }
    r
}

/// Folds real and imaginary parts independently.
pub fn fold_complex(z: Complex64, lambda: f64) -> Complex64 {
    Complex64::new(fold_scalar(z.re, lambda), fold_scalar(z.im, lambda))
}

/// Where additive noise enters the acquisition chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoisePlacement {
    /// Noise is added to the analog input before folding.
    #[default]
    PreFold,
    /// Noise is added to the folded samples; they may leave `[-λ, λ)`.
    PostFold,
    /// Noise is added to the folded samples, which are then folded again.
    PostFoldRefolded,
}

/// Which signal components the converter digitizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channels {
    /// Independent converters on the real and imaginary parts.
    #[default]
    Complex,
    /// A single converter on the real part; the imaginary output is zero.
    RealOnly,
}

/// Modulo converter settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuloConfig {
    pub lambda: f64,
    #[serde(default)]
    pub bit_depth: Option<u32>,
    /// Noise level relative to the reference signal power (the input for
    /// pre-fold noise, the folded samples otherwise).
    #[serde(default)]
    pub noise_snr_db: Option<f64>,
    #[serde(default)]
    pub noise_seed: u64,
    #[serde(default)]
    pub noise_placement: NoisePlacement,
    #[serde(default)]
    pub channels: Channels,
}

impl ModuloConfig {
    /// Noiseless, unquantized converter with threshold `lambda`.
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            bit_depth: None,
            noise_snr_db: None,
            noise_seed: 0,
            noise_placement: NoisePlacement::PreFold,
            channels: Channels::Complex,
        }
    }

    pub fn with_bits(mut self, bits: u32) -> Self {
        self.bit_depth = Some(bits);
        self
    }

    pub fn with_noise(mut self, snr_db: f64, seed: u64, placement: NoisePlacement) -> Self {
        self.noise_snr_db = Some(snr_db);
        self.noise_seed = seed;
        self.noise_placement = placement;
        self
    }

    pub fn with_channels(mut self, channels: Channels) -> Self {
        self.channels = channels;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("threshold must be positive, got {}", self.lambda)));
        }
        if self.bit_depth == Some(0) {
            return Err(invalid("bit depth must be at least 1"));
        }
        if let Some(b) = self.bit_depth {
            if b > 52 {
                return Err(invalid(format!("bit depth {b} exceeds double precision")));
            }
        }
        if let Some(snr) = self.noise_snr_db {
            if snr.is_nan() {
                return Err(invalid("SNR must not be NaN"));
            }
        }
        Ok(())
    }

    /// Quantizer step `2λ / 2^b`, if a bit depth is configured.
    pub fn quantizer_step(&self) -> Option<f64> {
        self.bit_depth.map(|b| quantizer_step(self.lambda, b))
    }
}

/// Folded samples `y[k]` together with the converter that produced them.
///
/// Every sample lies in `[-λ, λ)` componentwise, except when noise was added
/// after folding without refolding.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldedSeries {
    series: ComplexSeries,
    config: ModuloConfig,
}

impl FoldedSeries {
    /// Wraps externally produced samples, checking the range invariant.
    pub fn new(series: ComplexSeries, config: ModuloConfig) -> Result<Self> {
        config.validate()?;
        if config.noise_placement != NoisePlacement::PostFold || config.noise_snr_db.is_none() {
            let lam = config.lambda;
            if let Some((k, _)) = series
                .samples()
                .iter()
                .enumerate()
                .find(|(_, z)| !in_range(z.re, lam) || !in_range(z.im, lam))
            {
                return Err(invalid(format!("folded sample {k} lies outside [-λ, λ]")));
            }
        }
        Ok(Self { series, config })
    }

    pub fn series(&self) -> &ComplexSeries {
        &self.series
    }

    pub fn samples(&self) -> &[Complex64] {
        self.series.samples()
    }

    pub fn config(&self) -> &ModuloConfig {
        &self.config
    }

    pub fn lambda(&self) -> f64 {
        self.config.lambda
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

fn in_range(v: f64, lambda: f64) -> bool {
    v.abs() <= lambda
}

/// Residual `r[k] = 2λ (m_re[k] + j m_im[k])` stored as exact integers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualSeries {
    pub re: Vec<i64>,
    pub im: Vec<i64>,
}

impl ResidualSeries {
    pub fn zeros(len: usize) -> Self {
        Self {
            re: vec![0; len],
            im: vec![0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    /// `r[k]` for threshold `lambda`.
    pub fn value(&self, k: usize, lambda: f64) -> Complex64 {
        Complex64::new(self.re[k] as f64, self.im[k] as f64) * (2.0 * lambda)
    }

    /// Indices with a nonzero residual.
    pub fn fold_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.re[k] != 0 || self.im[k] != 0)
            .collect()
    }

    pub fn fold_count(&self) -> usize {
        self.fold_indices().len()
    }
}

/// Applies the converter `cfg` to `x`: optional noise (pre- or post-fold),
/// folding, then optional quantization.
pub fn fold_series(x: &ComplexSeries, cfg: &ModuloConfig) -> Result<FoldedSeries> {
    cfg.validate()?;
    let lam = cfg.lambda;
    let mut samples: Vec<Complex64> = match cfg.channels {
        Channels::Complex => x.samples().to_vec(),
        Channels::RealOnly => x.samples().iter().map(|z| Complex64::new(z.re, 0.0)).collect(),
    };
    let noisy = cfg.noise_snr_db.is_some();
    if noisy && cfg.noise_placement == NoisePlacement::PreFold {
        add_noise(&mut samples, cfg);
    }
    for z in samples.iter_mut() {
        *z = fold_complex(*z, lam);
    }
    if noisy && cfg.noise_placement != NoisePlacement::PreFold {
        add_noise(&mut samples, cfg);
        if cfg.noise_placement == NoisePlacement::PostFoldRefolded {
            for z in samples.iter_mut() {
                *z = fold_complex(*z, lam);
            }
        }
    }
    if let Some(bits) = cfg.bit_depth {
        let step = quantizer_step(lam, bits);
        for z in samples.iter_mut() {
            *z = Complex64::new(
                quantize_scalar(z.re, lam, step, bits),
                quantize_scalar(z.im, lam, step, bits),
            );
        }
    }
    if cfg.channels == Channels::RealOnly {
        for z in samples.iter_mut() {
            z.im = 0.0;
        }
    }
    Ok(FoldedSeries {
        series: x.with_samples(samples)?,
        config: cfg.clone(),
    })
}

/// Noise standard deviation per active component for a reference power.
pub fn noise_sigma(reference_power: f64, snr_db: f64, channels: Channels) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let noise_power = reference_power / 10f64.powf(snr_db / 10.0);
    match channels {
        Channels::Complex => (noise_power / 2.0).sqrt(),
        Channels::RealOnly => noise_power.sqrt(),
    }
}

fn add_noise(samples: &mut [Complex64], cfg: &ModuloConfig) {
    let Some(snr) = cfg.noise_snr_db else { return };
    let power = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64;
    let sigma = noise_sigma(power, snr, cfg.channels);
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
    for z in samples.iter_mut() {
        z.re += normal.sample(&mut rng);
        if cfg.channels == Channels::Complex {
            z.im += normal.sample(&mut rng);
        }
    }
}

/// `2λ / 2^b`.
pub fn quantizer_step(lambda: f64, bits: u32) -> f64 {
    2.0 * lambda / 2f64.powi(bits as i32)
}

/// Reconstruction level `i` of the `b`-bit mid-rise quantizer on `[-λ, λ)`.
pub fn quantizer_level(lambda: f64, bits: u32, i: u64) -> f64 {
    (i as f64 + 0.5) * quantizer_step(lambda, bits) - lambda
}

fn quantize_scalar(v: f64, lambda: f64, step: f64, bits: u32) -> f64 {
    let top = (1u64 << bits) - 1;
    let i = ((v + lambda) / step).floor();
    let i = if i < 0.0 {
        0
    } else if i > top as f64 {
        top
    } else {
        i as u64
    };
    (i as f64 + 0.5) * step - lambda
}

/// Mid-rise uniform quantizer with `2^b` levels spanning `[-λ, λ)`, applied
/// to each component. Out-of-range inputs map to the outermost levels.
pub fn quantize(y: &FoldedSeries, bits: u32) -> Result<FoldedSeries> {
    if bits == 0 || bits > 52 {
        return Err(invalid(format!("bit depth must be in 1..=52, got {bits}")));
    }
    let lam = y.lambda();
    let step = quantizer_step(lam, bits);
    let samples = y
        .samples()
        .iter()
        .map(|z| {
            Complex64::new(
                quantize_scalar(z.re, lam, step, bits),
                quantize_scalar(z.im, lam, step, bits),
            )
        })
        .collect();
    let mut config = y.config.clone();
    config.bit_depth = Some(bits);
    Ok(FoldedSeries {
        series: y.series.with_samples(samples)?,
        config,
    })
}

/// Recovers the integer residual `m` with `x - y = 2λ m` from a noiselessly
/// folded pair.
pub fn residual_oracle(x: &ComplexSeries, y: &FoldedSeries) -> Result<ResidualSeries> {
    if !x.same_grid(y.series()) {
        return Err(invalid("series and folded series are on different grids"));
    }
    let lam = y.lambda();
    let period = 2.0 * lam;
    let mut out = ResidualSeries::zeros(x.len());
    for (k, (a, b)) in x.samples().iter().zip(y.samples()).enumerate() {
        let d = a - b;
        let (mr, mi) = ((d.re / period).round(), (d.im / period).round());
        let dev_re = (d.re - period * mr).abs();
        let dev_im = (d.im - period * mi).abs();
        let tol_re = 1e-9 * lam + 8.0 * f64::EPSILON * a.re.abs();
        let tol_im = 1e-9 * lam + 8.0 * f64::EPSILON * a.im.abs();
        if dev_re > tol_re || dev_im > tol_im {
            return Err(Error::InconsistentPair {
                index: k,
                deviation: dev_re.max(dev_im),
            });
        }
        out.re[k] = mr as i64;
        out.im[k] = mi as i64;
    }
    Ok(out)
}
