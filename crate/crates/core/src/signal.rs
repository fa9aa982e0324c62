//! Multiband test signals
//!
//! A multiband signal is a sum of `P` bandlimited basebands `φ_p`, each
//! modulated by `exp(-j ω_p t)`. Basebands are mixtures of sinc atoms, which
//! keeps their peak amplitude controllable and their spectrum inside
//! `[-Ω_B, Ω_B]` up to truncation by the finite grid.
//!
//! All frequencies are angular (rad/s).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::series::{ComplexSeries, TimeGrid};

/// Reproducible source of one baseband.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasebandSeed {
    pub seed: u64,
    /// Amplitude scale applied to every atom of the band.
    pub energy: f64,
    /// Use the complex conjugate of the generated baseband. Pairing a band at
    /// `ω` with a conjugated band of the same seed at `-ω` yields a real signal.
    #[serde(default)]
    pub conjugate: bool,
}

impl BasebandSeed {
    pub fn new(seed: u64, energy: f64) -> Self {
        Self {
            seed,
            energy,
            conjugate: false,
        }
    }

    pub fn conjugated(self) -> Self {
        Self {
            conjugate: !self.conjugate,
            ..self
        }
    }
}

/// Smooth fade-in applied to every baseband so that the first samples of the
/// signal are (numerically) zero.
///
/// The envelope is `0.5 (1 + erf((t - t0 - quiet - ramp/2) / (ramp/6)))`,
/// whose spectrum is Gaussian and therefore widens each band only slightly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadIn {
    /// Seconds of (near) silence at the start of the grid.
    pub quiet: f64,
    /// Seconds over which the envelope rises from 0 to 1.
    pub ramp: f64,
}

impl LeadIn {
    pub fn envelope(&self, t_from_start: f64) -> f64 {
        let centre = self.quiet + 0.5 * self.ramp;
        let width = self.ramp / 6.0;
        0.5 * (1.0 + libm::erf((t_from_start - centre) / width))
    }
}

/// Generative description of a multiband signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultibandSpec {
    pub band_count: usize,
    /// Baseband half-width Ω_B in rad/s.
    pub baseband_halfwidth: f64,
    /// Carrier set Ω_C in rad/s.
    pub carriers: Vec<f64>,
    pub baseband_seeds: Vec<BasebandSeed>,
    pub components_per_band: usize,
    #[serde(default)]
    pub lead_in: Option<LeadIn>,
}

impl MultibandSpec {
    /// Spec with one seed per carrier, all at unit energy.
    pub fn new(
        baseband_halfwidth: f64,
        carriers: Vec<f64>,
        baseband_seeds: Vec<BasebandSeed>,
        components_per_band: usize,
    ) -> Result<Self> {
        let spec = Self {
            band_count: carriers.len(),
            baseband_halfwidth,
            carriers,
            baseband_seeds,
            components_per_band,
            lead_in: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_lead_in(mut self, lead_in: LeadIn) -> Self {
        self.lead_in = Some(lead_in);
        self
    }

    /// Checks the structural invariants and band disjointness
    /// `|ω_p - ω_q| > Ω_B`.
    pub fn validate(&self) -> Result<()> {
        if self.band_count == 0 {
            return Err(invalid("band count must be positive"));
        }
        if self.carriers.len() != self.band_count {
            return Err(invalid(format!(
                "{} carriers for {} bands",
                self.carriers.len(),
                self.band_count
            )));
        }
        if self.baseband_seeds.len() != self.band_count {
            return Err(invalid(format!(
                "{} baseband seeds for {} bands",
                self.baseband_seeds.len(),
                self.band_count
            )));
        }
        if !(self.baseband_halfwidth > 0.0 && self.baseband_halfwidth.is_finite()) {
            return Err(invalid("baseband half-width must be positive"));
        }
        if self.carriers.iter().any(|w| !w.is_finite()) {
            return Err(invalid("carriers must be finite"));
        }
        for p in 0..self.band_count {
            for q in p + 1..self.band_count {
                let gap = (self.carriers[p] - self.carriers[q]).abs();
                if gap <= self.baseband_halfwidth {
                    return Err(invalid(format!(
                        "bands {p} and {q} overlap: carrier gap {gap:e} <= Ω_B {:e}",
                        self.baseband_halfwidth
                    )));
                }
            }
        }
        if let Some(lead) = &self.lead_in {
            if !(lead.quiet >= 0.0 && lead.ramp > 0.0) {
                return Err(invalid("lead-in needs quiet >= 0 and ramp > 0"));
            }
        }
        Ok(())
    }
}

/// `amplitude * sinc(Ω_B (t - offset) / π)` with `sinc(x) = sin(πx)/(πx)`.
pub fn sinc_atom(amplitude: Complex64, halfwidth: f64, offset: f64, t: f64) -> Complex64 {
    let arg = halfwidth * (t - offset);
    if arg == 0.0 {
        amplitude
    } else {
        amplitude * (arg.sin() / arg)
    }
}

/// Fraction of the grid span, centred, from which atom offsets are drawn.
/// Keeping atoms off the very edges holds truncation leakage near the floor.
pub const ATOM_SPAN_FRACTION: f64 = 0.8;

/// Default out-of-band leakage floor in dB relative to the spectral peak.
pub const LEAKAGE_FLOOR_DB: f64 = -40.0;

/// Default guard beyond `Ω_B`, as a fraction of `Ω_B`, for leakage checks.
pub const LEAKAGE_GUARD_FRACTION: f64 = 0.5;

/// One baseband `φ` sampled on `grid`: a sum of `components` sinc atoms with
/// complex Gaussian amplitudes and offsets uniform over the central
/// [`ATOM_SPAN_FRACTION`] of the grid span.
pub fn synth_baseband(
    seed: u64,
    halfwidth: f64,
    grid: &TimeGrid,
    components: usize,
) -> Result<ComplexSeries> {
    if !(halfwidth > 0.0 && halfwidth.is_finite()) {
        return Err(invalid(format!("baseband half-width must be positive, got {halfwidth}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = 0.5 * (1.0 - ATOM_SPAN_FRACTION) * (grid.end_time() - grid.start_time());
    let (t0, t1) = (grid.start_time() + margin, grid.end_time() - margin);
    let atoms: Vec<(Complex64, f64)> = (0..components)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let amp = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            let offset = if t1 > t0 { rng.random_range(t0..=t1) } else { t0 };
            (amp, offset)
        })
        .collect();
    let samples = grid
        .times()
        .map(|t| {
            atoms
                .iter()
                .fold(Complex64::new(0.0, 0.0), |acc, &(a, tau)| {
                    acc + sinc_atom(a, halfwidth, tau, t)
                })
        })
        .collect();
    ComplexSeries::new(samples, grid.sample_period(), grid.start_index())
}

/// Largest DFT magnitude of `x` farther than `halfwidth + guard` (rad/s,
/// circularly) from `centre`, in dB relative to the largest DFT magnitude.
/// The series is not windowed, so truncation leakage is measured as is.
pub fn out_of_band_leakage_db(x: &ComplexSeries, centre: f64, halfwidth: f64, guard: f64) -> f64 {
    let n = x.len();
    let mut buf = x.samples().to_vec();
    rustfft::FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let rate = 2.0 * std::f64::consts::PI / x.sample_period();
    let (mut peak, mut outside) = (0.0f64, 0.0f64);
    for (i, z) in buf.iter().enumerate() {
        let d = (i as f64 / n as f64 * rate - centre).rem_euclid(rate);
        let mag = z.norm();
        peak = peak.max(mag);
        if d.min(rate - d) > halfwidth + guard {
            outside = outside.max(mag);
        }
    }
    if peak == 0.0 {
        return f64::NEG_INFINITY;
    }
    20.0 * (outside / peak).log10()
}

/// Output of [`synth_multiband`].
#[derive(Clone, Debug)]
pub struct MultibandSignal {
    /// `x[k] = Σ_p φ_p[k] exp(-j ω_p t_k)`.
    pub series: ComplexSeries,
    /// Each `φ_p` as used in the sum (energy, conjugation and lead-in applied).
    pub basebands: Vec<ComplexSeries>,
    /// `max_k |φ_p[k]|` per band.
    pub band_peaks: Vec<f64>,
}

impl MultibandSignal {
    /// `max_p ‖φ_p‖∞`.
    pub fn baseband_peak(&self) -> f64 {
        self.band_peaks.iter().cloned().fold(0.0, f64::max)
    }

    /// Multiplies every baseband (and hence the signal) by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            series: self.series.scale(factor),
            basebands: self.basebands.iter().map(|b| b.scale(factor)).collect(),
            band_peaks: self.band_peaks.iter().map(|p| p * factor.abs()).collect(),
        }
    }

    /// Rescales so that the componentwise peak of the signal equals `peak`.
    pub fn normalized_to_peak(&self, peak: f64) -> Self {
        let current = self.series.peak_amplitude();
        if current == 0.0 {
            self.clone()
        } else {
            self.scaled(peak / current)
        }
    }
}

/// Complex exponential `exp(-j ω t)`.
pub(crate) fn carrier(omega: f64, t: f64) -> Complex64 {
    let phase = omega * t;
    Complex64::new(phase.cos(), -phase.sin())
}

/// Synthesizes the multiband signal described by `spec` on `grid`.
pub fn synth_multiband(spec: &MultibandSpec, grid: &TimeGrid) -> Result<MultibandSignal> {
    spec.validate()?;
    let envelope: Option<Vec<f64>> = spec.lead_in.map(|lead| {
        grid.times()
            .map(|t| lead.envelope(t - grid.start_time()))
            .collect()
    });
    let mut basebands = Vec::with_capacity(spec.band_count);
    for s in &spec.baseband_seeds {
        let raw = synth_baseband(s.seed, spec.baseband_halfwidth, grid, spec.components_per_band)?;
        let samples = raw
            .samples()
            .iter()
            .enumerate()
            .map(|(k, &z)| {
                let z = if s.conjugate { z.conj() } else { z };
                let w = envelope.as_ref().map_or(1.0, |e| e[k]);
                z * (s.energy * w)
            })
            .collect();
        basebands.push(raw.with_samples(samples)?);
    }
    let mut sum = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (phi, &omega) in basebands.iter().zip(&spec.carriers) {
        for (k, (acc, &z)) in sum.iter_mut().zip(phi.samples()).enumerate() {
            *acc += z * carrier(omega, grid.time(k));
        }
    }
    let band_peaks = basebands.iter().map(|b| b.peak_modulus()).collect();
    Ok(MultibandSignal {
        series: ComplexSeries::new(sum, grid.sample_period(), grid.start_index())?,
        basebands,
        band_peaks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::from_origin(1e-4, n).unwrap()
    }

    #[test]
    fn zero_components_is_silent() {
        let s = synth_baseband(3, 2.0 * PI * 100.0, &grid(64), 0).unwrap();
        assert!(s.samples().iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn atom_peaks_at_its_offset() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(sinc_atom(one, 2.0 * PI * 400.0, 0.0, 0.0), one);
        // first zero crossing at t = π / Ω_B
        let w = 2.0 * PI * 400.0;
        assert!(sinc_atom(one, w, 0.0, PI / w).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_halfwidth() {
        assert!(synth_baseband(1, 0.0, &grid(8), 3).is_err());
        assert!(synth_baseband(1, -1.0, &grid(8), 3).is_err());
    }

    #[test]
    fn single_band_at_dc_is_the_baseband() {
        let w = 2.0 * PI * 50.0;
        let spec = MultibandSpec::new(w, vec![0.0], vec![BasebandSeed::new(11, 1.0)], 5).unwrap();
        let g = grid(256);
        let x = synth_multiband(&spec, &g).unwrap();
        let phi = synth_baseband(11, w, &g, 5).unwrap();
        assert_eq!(x.series.samples(), phi.samples());
    }

    #[test]
    fn rejects_overlapping_bands() {
        let w = 10.0;
        let seeds = vec![BasebandSeed::new(1, 1.0); 2];
        assert!(MultibandSpec::new(w, vec![0.0, 5.0], seeds.clone(), 1).is_err());
        assert!(MultibandSpec::new(w, vec![0.0, 10.0], seeds.clone(), 1).is_err());
        assert!(MultibandSpec::new(w, vec![0.0, 10.5], seeds, 1).is_ok());
        assert!(MultibandSpec::new(w, vec![0.0], vec![], 1).is_err());
    }

    #[test]
    fn conjugate_pair_is_real() {
        let w = 2.0 * PI * 20.0;
        let wc = 2.0 * PI * 300.0;
        let s = BasebandSeed::new(5, 1.0);
        let spec = MultibandSpec::new(w, vec![wc, -wc], vec![s, s.conjugated()], 6).unwrap();
        let x = synth_multiband(&spec, &grid(300)).unwrap();
        assert!(x.series.samples().iter().all(|z| z.im == 0.0));
        assert!(x.series.peak_amplitude() > 0.0);
    }

    #[test]
    fn lead_in_silences_the_start() {
        let w = 2.0 * PI * 100.0;
        let spec = MultibandSpec::new(w, vec![2.0 * PI * 1000.0], vec![BasebandSeed::new(2, 1.0)], 8)
            .unwrap()
            .with_lead_in(LeadIn {
                quiet: 0.01,
                ramp: 0.02,
            });
        let x = synth_multiband(&spec, &grid(1000)).unwrap();
        let peak = x.series.peak_amplitude();
        assert!(x.series.samples()[..100].iter().all(|z| z.norm() < 1e-4 * peak));
    }
}
