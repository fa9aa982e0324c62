//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use mbunfold::series::ComplexSeries;
use mbunfold::signal::{synth_multiband, BasebandSeed, LeadIn, MultibandSignal, MultibandSpec};
use mbunfold::TimeGrid;
use num_complex::Complex64;
use rustfft::FftPlanner;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Polynomial `Π_p (-1 + z_p D)` in ascending powers of `D`, built by the
/// Vieta recursion on the roots rather than by convolution of taps.
pub fn vieta_taps(carriers: &[f64], ts: f64) -> Vec<Complex64> {
    // e_k via the standard recurrence e_k ← e_k + z e_{k-1}
    let p = carriers.len();
    let mut e = vec![c(0.0, 0.0); p + 1];
    e[0] = c(1.0, 0.0);
    for &w in carriers {
        let z = Complex64::from_polar(1.0, -w * ts);
        for k in (1..=p).rev() {
            e[k] = e[k] + z * e[k - 1];
        }
    }
    (0..=p)
        .map(|k| if (p - k).is_multiple_of(2) { e[k] } else { -e[k] })
        .collect()
}

/// Direct `O(n·L)` causal filter output at `k ≥ L-1`, written independently
/// of the library convolution.
pub fn fir_valid(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    let l = h.len();
    let mut out = Vec::new();
    for k in (l - 1)..x.len() {
        let mut acc = c(0.0, 0.0);
        for j in 0..l {
            acc += h[j] * x[k - j];
        }
        out.push(acc);
    }
    out
}

/// Power spectrum (|X|²) on FFT bins, with bin frequencies in rad/s in
/// `[-π/T, π/T)`.
pub fn spectrum(x: &[Complex64], ts: f64) -> Vec<(f64, f64)> {
    let n = x.len();
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let ws = TAU / ts;
    buf.iter()
        .enumerate()
        .map(|(i, z)| {
            let mut f = i as f64 / n as f64 * ws;
            if f >= ws / 2.0 {
                f -= ws;
            }
            (f, z.norm_sqr())
        })
        .collect()
}

/// Circular distance between two angular frequencies modulo `ws`.
pub fn circ_dist(a: f64, b: f64, ws: f64) -> f64 {
    let d = (a - b).rem_euclid(ws);
    d.min(ws - d)
}

/// Multiband signal with unit energies, optional lead-in.
pub fn multiband(
    carriers: &[f64],
    halfwidth: f64,
    ts: f64,
    n: usize,
    components: usize,
    seed: u64,
    lead_in: Option<LeadIn>,
) -> MultibandSignal {
    let seeds = (0..carriers.len())
        .map(|i| BasebandSeed::new(seed.wrapping_mul(31).wrapping_add(i as u64), 1.0))
        .collect();
    let mut spec = MultibandSpec::new(halfwidth, carriers.to_vec(), seeds, components).unwrap();
    if let Some(l) = lead_in {
        spec = spec.with_lead_in(l);
    }
    synth_multiband(&spec, &TimeGrid::from_origin(ts, n).unwrap()).unwrap()
}

/// Modulus peak of a slice.
pub fn peak_mod(x: &[Complex64]) -> f64 {
    x.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn series(samples: Vec<Complex64>, ts: f64) -> ComplexSeries {
    ComplexSeries::new(samples, ts, 0).unwrap()
}

/// Brute-force admissibility of sample period `t` for the real band
/// `[f_lo, f_hi]` (rad/s): no image `k·Ω_S ± band` may overlap the band
/// (contact allowed), and `t` must not exceed the cap `1/(4 Ω_B e)`. A band
/// reaching below DC occupies `[0, f_hi]`.
pub fn bandpass_oracle(center: f64, halfwidth: f64, t: f64) -> bool {
    let cap = 1.0 / (4.0 * halfwidth * std::f64::consts::E);
    if t <= 0.0 || t > cap {
        return false;
    }
    let lo = (center - halfwidth).max(0.0);
    let hi = center + halfwidth;
    let ws = TAU / t;
    let overlaps = |a0: f64, a1: f64| a0 < hi && lo < a1;
    let kmax = (2.0 * hi / ws).ceil() as i64 + 2;
    for k in -kmax..=kmax {
        let shift = k as f64 * ws;
        // shifted copies of the band itself
        if k != 0 && overlaps(lo + shift, hi + shift) {
            return false;
        }
        // shifted copies of the mirrored band [-hi, -lo]
        if overlaps(-hi + shift, -lo + shift) {
            return false;
        }
    }
    true
}
