//! Uniformly sampled complex sequences and the grids they live on.

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// A uniformly sampled complex sequence `x[k]`, `k = start_index ..`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSeries {
    samples: Vec<Complex64>,
    sample_period: f64,
    start_index: i64,
}

impl ComplexSeries {
    pub fn new(samples: Vec<Complex64>, sample_period: f64, start_index: i64) -> Result<Self> {
        if !(sample_period > 0.0 && sample_period.is_finite()) {
            return Err(invalid(format!("sample period must be positive, got {sample_period}")));
        }
        if samples.is_empty() {
            return Err(invalid("series must hold at least one sample"));
        }
        Ok(Self {
            samples,
            sample_period,
            start_index,
        })
    }

    /// Builds a series from real samples (zero imaginary part).
    pub fn from_real(samples: &[f64], sample_period: f64, start_index: i64) -> Result<Self> {
        Self::new(
            samples.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            sample_period,
            start_index,
        )
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn start_index(&self) -> i64 {
        self.start_index
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Absolute index of the `k`-th stored sample.
    pub fn index(&self, k: usize) -> i64 {
        self.start_index + k as i64
    }

    /// Sampling instant of the `k`-th stored sample.
    pub fn time(&self, k: usize) -> f64 {
        self.index(k) as f64 * self.sample_period
    }

    /// Same grid, new values.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != self.samples.len() {
            return Err(invalid(format!(
                "length mismatch: {} vs {}",
                samples.len(),
                self.samples.len()
            )));
        }
        Ok(Self {
            samples,
            ..self.clone()
        })
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|&z| f(z)).collect(),
            ..self.clone()
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|z| z * factor)
    }

    /// Mean of `|x[k]|²`.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Componentwise peak, see [`peak_amplitude`].
    pub fn peak_amplitude(&self) -> f64 {
        peak_amplitude(&self.samples)
    }

    /// `max_k |x[k]|` using the complex modulus.
    pub fn peak_modulus(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn same_grid(&self, other: &ComplexSeries) -> bool {
        self.samples.len() == other.samples.len()
            && self.sample_period == other.sample_period
            && self.start_index == other.start_index
    }
}

/// `max_k max(|Re x[k]|, |Im x[k]|)`.
///
/// Folding acts on each component separately, so this is the quantity that
/// decides whether a sample folds.
pub fn peak_amplitude(samples: &[Complex64]) -> f64 {
    samples
        .iter()
        .fold(0.0, |m, z| m.max(z.re.abs()).max(z.im.abs()))
}

/// Sampling instants `start_time + k * sample_period`, `k < len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    start_time: f64,
    sample_period: f64,
    len: usize,
}

impl TimeGrid {
    pub fn new(start_time: f64, sample_period: f64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(invalid("time grid must have at least one point"));
        }
        if !(sample_period > 0.0 && sample_period.is_finite()) {
            return Err(invalid(format!("sample period must be positive, got {sample_period}")));
        }
        if !start_time.is_finite() {
            return Err(invalid("start time must be finite"));
        }
        Ok(Self {
            start_time,
            sample_period,
            len,
        })
    }

    /// Grid starting at `t = 0`.
    pub fn from_origin(sample_period: f64, len: usize) -> Result<Self> {
        Self::new(0.0, sample_period, len)
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len - 1)
    }

    /// Index of the first sample, rounded onto the sampling lattice.
    pub fn start_index(&self) -> i64 {
        (self.start_time / self.sample_period).round() as i64
    }

    /// Instant of the `k`-th grid point, computed as `(start_index + k) * T`
    /// so it matches [`ComplexSeries::time`] for lattice-aligned grids.
    pub fn time(&self, k: usize) -> f64 {
        if self.start_time == 0.0 {
            k as f64 * self.sample_period
        } else {
            self.start_time + k as f64 * self.sample_period
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |k| self.time(k))
    }
}
