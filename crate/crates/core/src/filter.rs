//! Carrier-aware annihilating filter.
//!
//! For a carrier set Ω_C the base filter is the convolution of the two-tap
//! factors `ψ_p = [-1, exp(-j ω_p T_S)]`. Each factor maps a band
//! `φ_p[k] exp(-j ω_p k T_S)` to `exp(-j ω_p k T_S) (Δ φ_p)[k]` with
//! `Δ = [-1, 1]`, so the N-th power of the product shrinks every band at the
//! rate of an N-th order finite difference of its baseband.
//!
//! Taps are indexed causally: `taps[0]` multiplies the current sample.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

use crate::error::{invalid, Error, Result};
use crate::series::ComplexSeries;

/// Default limit on `N·P`, the number of filter taps minus one.
pub const DEFAULT_TAP_CAP: usize = 64;

/// Complex FIR filter `Ψ^N` for a carrier set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterTaps {
    #[serde(rename = "carriers_rad_s")]
    pub carriers: Vec<f64>,
    pub sample_period: f64,
    pub order: usize,
    pub normalized: bool,
    #[serde(with = "complex_list")]
    pub taps: Vec<Complex64>,
    /// Value divided out by normalization (1 when unnormalized).
    #[serde(default = "unit", with = "complex_value")]
    pub normalizer: Complex64,
}

fn unit() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl FilterTaps {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// `N·P`, the filter span in samples.
    pub fn span(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn l1_norm(&self) -> f64 {
        l1_norm(&self.taps)
    }

    /// `Σ_k taps[k] exp(-j ω k T_S)`.
    pub fn response(&self, omega: f64) -> Complex64 {
        frequency_response(&self.taps, omega, self.sample_period)
    }

    /// Magnitude of the filter output for the unit tone `exp(-j ω k T_S)`,
    /// i.e. `|Ψ̂(-ω)|`. Zero for every carrier in the set.
    pub fn tone_gain(&self, omega: f64) -> f64 {
        self.response(-omega).norm()
    }

    /// Filters `x` and returns only the full-overlap outputs, i.e. indices
    /// `span..len` of `x`.
    pub fn apply_valid(&self, x: &[Complex64]) -> Vec<Complex64> {
        convolve_valid(x, &self.taps)
    }

    /// Componentwise peak of the full-overlap output on `x`.
    pub fn filtered_peak(&self, x: &ComplexSeries) -> f64 {
        crate::series::peak_amplitude(&self.apply_valid(x.samples()))
    }
}

/// Reduces a carrier into `[0, 2π/T_S)`. Values already in range are returned
/// unchanged.
pub fn reduce_carrier(omega: f64, sample_period: f64) -> f64 {
    let rate = 2.0 * PI / sample_period;
    if (0.0..rate).contains(&omega) {
        return omega;
    }
    let r = omega.rem_euclid(rate);
    if r >= rate {
        0.0
    } else {
        r
    }
}

/// Maps every carrier into `[0, 2π/T_S)`; fails if two carriers land on the
/// same alias.
pub fn alias_map(carriers: &[f64], sample_period: f64) -> Result<Vec<f64>> {
    if !(sample_period > 0.0 && sample_period.is_finite()) {
        return Err(invalid("sample period must be positive"));
    }
    let mapped: Vec<f64> = carriers
        .iter()
        .map(|&w| reduce_carrier(w, sample_period))
        .collect();
    check_distinct(&mapped).map_err(|(first, second)| Error::AliasCollision { first, second })?;
    Ok(mapped)
}

fn check_distinct(values: &[f64]) -> std::result::Result<(), (usize, usize)> {
    for p in 0..values.len() {
        for q in p + 1..values.len() {
            if values[p] == values[q] {
                return Err((p, q));
            }
        }
    }
    Ok(())
}

/// Unit-modulus root `exp(-j ω T_S)` of the factor `ψ_p`, from the reduced
/// carrier so that aliases give bit-identical filters.
fn carrier_root(omega: f64, sample_period: f64) -> Complex64 {
    let phase = reduce_carrier(omega, sample_period) * sample_period;
    Complex64::new(phase.cos(), -phase.sin())
}

/// Full linear convolution.
pub fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Causal FIR output `Σ_j h[j] x[k-j]` for `k = h.len()-1 .. x.len()`.
pub fn convolve_valid(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    if h.is_empty() || x.len() < h.len() {
        return Vec::new();
    }
    let span = h.len() - 1;
    (span..x.len())
        .map(|k| {
            h.iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (j, &hj)| acc + hj * x[k - j])
        })
        .collect()
}

pub fn l1_norm(taps: &[Complex64]) -> f64 {
    taps.iter().map(|z| z.norm()).sum()
}

/// `Σ_k taps[k] exp(-j ω k T_S)`.
pub fn frequency_response(taps: &[Complex64], omega: f64, sample_period: f64) -> Complex64 {
    taps.iter()
        .enumerate()
        .fold(Complex64::new(0.0, 0.0), |acc, (k, &t)| {
            let phase = omega * k as f64 * sample_period;
            acc + t * Complex64::new(phase.cos(), -phase.sin())
        })
}

/// Base filter `Ψ = ψ_0 ∗ ⋯ ∗ ψ_{P-1}` of length `P + 1`.
pub fn build_psi(carriers: &[f64], sample_period: f64) -> Result<FilterTaps> {
    if !(sample_period > 0.0 && sample_period.is_finite()) {
        return Err(invalid("sample period must be positive"));
    }
    if carriers.is_empty() {
        return Err(invalid("carrier set is empty"));
    }
    if carriers.iter().any(|w| !w.is_finite()) {
        return Err(invalid("carriers must be finite"));
    }
    let reduced: Vec<f64> = carriers
        .iter()
        .map(|&w| reduce_carrier(w, sample_period))
        .collect();
    check_distinct(&reduced).map_err(|(p, q)| {
        invalid(format!("carriers {p} and {q} coincide modulo the sampling rate"))
    })?;
    let mut taps = vec![Complex64::new(1.0, 0.0)];
    for &w in carriers {
        let factor = [Complex64::new(-1.0, 0.0), carrier_root(w, sample_period)];
        taps = convolve(&taps, &factor);
    }
    Ok(FilterTaps {
        carriers: carriers.to_vec(),
        sample_period,
        order: 1,
        normalized: false,
        taps,
        normalizer: unit(),
    })
}

/// `Ψ^N`, the N-fold self-convolution of an order-one filter.
pub fn psi_power(base: &FilterTaps, order: usize) -> Result<FilterTaps> {
    if order == 0 {
        return Err(invalid("filter order must be at least 1"));
    }
    if base.order != 1 {
        return Err(invalid(format!("base filter has order {}, expected 1", base.order)));
    }
    let mut taps = base.taps.clone();
    for _ in 1..order {
        taps = convolve(&base.taps, &taps);
    }
    Ok(FilterTaps {
        order,
        taps,
        normalizer: base.normalizer.powu(order as u32),
        ..base.clone()
    })
}

/// Builds `Ψ^N` for `carriers` directly.
pub fn build_psi_power(carriers: &[f64], sample_period: f64, order: usize) -> Result<FilterTaps> {
    psi_power(&build_psi(carriers, sample_period)?, order)
}

/// Divides every tap by `taps[0]` so that the current-sample tap is exactly 1.
pub fn normalize_for_recovery(filter: &FilterTaps) -> Result<FilterTaps> {
    if filter.normalized {
        return Ok(filter.clone());
    }
    let lead = *filter.taps.first().ok_or(Error::DegenerateFilter)?;
    if lead.norm() == 0.0 {
        return Err(Error::DegenerateFilter);
    }
    let mut taps: Vec<Complex64> = filter.taps.iter().map(|&t| t / lead).collect();
    taps[0] = Complex64::new(1.0, 0.0);
    Ok(FilterTaps {
        taps,
        normalized: true,
        normalizer: lead,
        ..filter.clone()
    })
}

/// Elementary symmetric polynomial of degree `k` in the variables
/// `exp(-j ω_p T_S)`, by explicit enumeration of all size-`k` subsets.
///
/// Exponential in `P`; intended as an independent cross-check.
pub fn esp_coefficients(carriers: &[f64], sample_period: f64, k: usize) -> Result<Complex64> {
    let p = carriers.len();
    if k > p {
        return Err(invalid(format!("degree {k} exceeds carrier count {p}")));
    }
    if p >= 31 {
        return Err(invalid("subset enumeration limited to 30 carriers"));
    }
    let roots: Vec<Complex64> = carriers
        .iter()
        .map(|&w| carrier_root(w, sample_period))
        .collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for mask in 0u32..(1u32 << p) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let prod = (0..p)
            .filter(|i| mask & (1 << i) != 0)
            .fold(Complex64::new(1.0, 0.0), |acc, i| acc * roots[i]);
        sum += prod;
    }
    Ok(sum)
}

/// Upper bound `P (T_S 2^{P-1} Ω_B e)^N φ_peak` on `‖Ψ^N ∗ x‖∞`.
pub fn shrinkage_bound(
    band_count: usize,
    halfwidth: f64,
    sample_period: f64,
    order: usize,
    phi_peak: f64,
) -> f64 {
    let base = contraction_factor(band_count, halfwidth, sample_period);
    band_count as f64 * base.powi(order as i32) * phi_peak
}

/// Per-order factor `T_S 2^{P-1} Ω_B e` of the shrinkage bound.
pub fn contraction_factor(band_count: usize, halfwidth: f64, sample_period: f64) -> f64 {
    sample_period * 2f64.powi(band_count as i32 - 1) * halfwidth * E
}

/// Sign of the exponent attached to the differenced baseband in the
/// commutation identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExponentSign {
    Negative,
    Positive,
}

/// Checks numerically that filtering one modulated band with the full filter
/// equals filtering its N-th differenced baseband, remodulated, with the
/// filter of the remaining carriers:
///
/// `(Ψ_Ω^N ∗ φ̃_p)[k] = (Ψ_{Ω∖ω_p}^N ∗ [(Δ^N ∗ φ_p)[m] e^{∓jω_p m T_S}])[k]`
///
/// where `φ̃_p[k] = φ_p[k] e^{-jω_p k T_S}`. Returns the largest absolute
/// difference over the full-overlap region.
pub fn verify_commutation_identity(
    baseband: &ComplexSeries,
    carriers: &[f64],
    band: usize,
    order: usize,
    sign: ExponentSign,
) -> Result<f64> {
    if band >= carriers.len() {
        return Err(invalid(format!("band {band} out of range")));
    }
    if order == 0 {
        return Err(invalid("order must be at least 1"));
    }
    let ts = baseband.sample_period();
    let omega = carriers[band];
    let tone = |m: usize, s: f64| {
        let phase = omega * baseband.time(m);
        Complex64::new(phase.cos(), s * phase.sin())
    };
    let phi = baseband.samples();
    let modulated: Vec<Complex64> = phi
        .iter()
        .enumerate()
        .map(|(m, &v)| v * tone(m, -1.0))
        .collect();
    let full = build_psi_power(carriers, ts, order)?;
    let lhs = full.apply_valid(&modulated);

    let rest: Vec<f64> = carriers
        .iter()
        .enumerate()
        .filter(|&(q, _)| q != band)
        .map(|(_, &w)| w)
        .collect();
    let diff = difference_power(order);
    let differenced = convolve(phi, &diff);
    let s = match sign {
        ExponentSign::Negative => -1.0,
        ExponentSign::Positive => 1.0,
    };
    let remodulated: Vec<Complex64> = differenced[..phi.len()]
        .iter()
        .enumerate()
        .map(|(m, &v)| v * tone(m, s))
        .collect();
    let rest_taps = if rest.is_empty() {
        vec![Complex64::new(1.0, 0.0)]
    } else {
        build_psi_power(&rest, ts, order)?.taps
    };
    // Δ^N contributes `order` taps of span, the leave-one-out filter the rest;
    // both sides are valid from index N·P on.
    let span = full.span();
    let rhs_full = convolve_valid(&remodulated, &rest_taps);
    let offset = span - (rest_taps.len() - 1);
    let rhs = &rhs_full[offset..];
    Ok(lhs
        .iter()
        .zip(rhs)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// Taps of `Δ^N` with `Δ = [-1, 1]`.
pub fn difference_power(order: usize) -> Vec<Complex64> {
    let delta = [Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)];
    let mut taps = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..order {
        taps = convolve(&taps, &delta);
    }
    taps
}

mod complex_list {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Pair {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<Pair> = v.iter().map(|z| Pair { re: z.re, im: z.im }).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<Pair>::deserialize(d)?;
        Ok(pairs.into_iter().map(|p| Complex64::new(p.re, p.im)).collect())
    }
}

mod complex_value {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Pair {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        Pair { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let p = Pair::deserialize(d)?;
        Ok(Complex64::new(p.re, p.im))
    }
}
