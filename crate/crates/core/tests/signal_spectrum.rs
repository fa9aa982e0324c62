mod common;

use std::f64::consts::TAU;

use common::{circ_dist, multiband, spectrum};
use mbunfold::signal::{
    out_of_band_leakage_db, synth_baseband, synth_multiband, BasebandSeed, LeadIn, MultibandSpec,
    LEAKAGE_FLOOR_DB, LEAKAGE_GUARD_FRACTION,
};
use mbunfold::TimeGrid;
use proptest::prelude::*;

/// Largest DFT magnitude farther than `halfwidth + guard` from every centre,
/// in dB relative to the spectral peak.
fn out_of_band_db(x: &[num_complex::Complex64], ts: f64, centres: &[f64], halfwidth: f64, guard: f64) -> f64 {
    let ws = TAU / ts;
    let bins = spectrum(x, ts);
    let peak = bins.iter().map(|b| b.1).fold(0.0, f64::max);
    let outside = bins
        .iter()
        .filter(|(f, _)| centres.iter().all(|&c| circ_dist(*f, c, ws) > halfwidth + guard))
        .map(|b| b.1)
        .fold(0.0, f64::max);
    10.0 * (outside / peak).log10()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn each_band_leaks_below_the_floor(seed in any::<u64>()) {
        let ts = 1e-4;
        let wb = TAU * 400.0;
        let grid = TimeGrid::from_origin(ts, 1024).unwrap();
        let phi = synth_baseband(seed, wb, &grid, 20).unwrap();
        let db = out_of_band_db(phi.samples(), ts, &[0.0], wb, LEAKAGE_GUARD_FRACTION * wb);
        prop_assert!(db < LEAKAGE_FLOOR_DB, "{} dB", db);
    }
}

#[test]
fn baseband_energy_stays_in_band() {
    let ts = 1e-4;
    let wb = TAU * 400.0;
    let grid = TimeGrid::from_origin(ts, 1024).unwrap();
    let phi = synth_baseband(7, wb, &grid, 20).unwrap();
    let guard = LEAKAGE_GUARD_FRACTION * wb;
    let db = out_of_band_db(phi.samples(), ts, &[0.0], wb, guard);
    assert!(db < LEAKAGE_FLOOR_DB, "{db} dB");
    let lib = out_of_band_leakage_db(&phi, 0.0, wb, guard);
    assert!((lib - db).abs() < 1e-9, "{lib} vs {db}");
}

#[test]
fn modulated_bands_sit_at_negative_carriers() {
    // exp(-jωt) moves a baseband to -ω
    let ts = 2.5e-5;
    let ws = TAU / ts;
    let wb = TAU * 200.0;
    let carriers: Vec<f64> = [3.1e3, 7.9e3, 12.2e3, 17.6e3, 25.0e3, 33.3e3]
        .iter()
        .map(|f| f * TAU)
        .collect();
    let sig = multiband(&carriers, wb, ts, 4096, 20, 11, None);
    let negated: Vec<f64> = carriers.iter().map(|w| -w).collect();
    let db = out_of_band_db(sig.series.samples(), ts, &negated, wb, LEAKAGE_GUARD_FRACTION * wb);
    assert!(db < LEAKAGE_FLOOR_DB, "{db} dB");
    // each band individually holds a sizeable share
    let bins = spectrum(sig.series.samples(), ts);
    let total: f64 = bins.iter().map(|b| b.1).sum();
    for &w in &carriers {
        let share: f64 = bins
            .iter()
            .filter(|(f, _)| circ_dist(*f, -w, ws) <= 1.1 * wb)
            .map(|b| b.1)
            .sum::<f64>()
            / total;
        assert!(share > 0.02, "band at {w}: {share}");
        let mirrored: f64 = bins
            .iter()
            .filter(|(f, _)| circ_dist(*f, w, ws) <= 1.1 * wb)
            .map(|b| b.1)
            .sum::<f64>()
            / total;
        assert!(mirrored < 1e-4, "energy at +{w}: {mirrored}");
    }
}

#[test]
fn conjugate_pairs_are_real() {
    let ts = 1e-4;
    let w = TAU * 1.3e3;
    let seeds = vec![BasebandSeed::new(5, 1.0), BasebandSeed::new(5, 1.0).conjugated()];
    let spec = MultibandSpec::new(TAU * 100.0, vec![w, -w], seeds, 8).unwrap();
    let sig = synth_multiband(&spec, &TimeGrid::from_origin(ts, 512).unwrap()).unwrap();
    let peak = sig.series.peak_modulus();
    for z in sig.series.samples() {
        assert!(z.im.abs() <= 1e-12 * peak, "{z}");
    }
}

#[test]
fn lead_in_silences_the_start() {
    let ts = 1e-4;
    let lead = LeadIn { quiet: 0.01, ramp: 0.02 };
    let sig = multiband(&[TAU * 500.0, TAU * 2.1e3], TAU * 100.0, ts, 1024, 10, 3, Some(lead));
    let peak = sig.series.peak_modulus();
    // the erf edge has width ramp/6: the quiet prefix ends three widths before
    // the centre (envelope ~1e-5) and its first 20 samples lie 5.4 widths away
    for (k, z) in sig.series.samples()[..100].iter().enumerate() {
        let limit = if k < 20 { 1e-12 } else { 1e-4 };
        assert!(z.norm() < limit * peak, "k={k} {}", z.norm() / peak);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthesis_is_deterministic_and_linear(seed in any::<u64>(), a in 0.1f64..10.0) {
        let ts = 1e-4;
        let carriers = [TAU * 900.0, TAU * 2.7e3];
        let one = multiband(&carriers, TAU * 150.0, ts, 256, 6, seed, None);
        let two = multiband(&carriers, TAU * 150.0, ts, 256, 6, seed, None);
        prop_assert_eq!(one.series.samples(), two.series.samples());
        // energy scales every band, so the sum scales with it
        let scaled_seeds = (0..2)
            .map(|i| BasebandSeed::new(seed.wrapping_mul(31).wrapping_add(i), a))
            .collect();
        let spec = MultibandSpec::new(TAU * 150.0, carriers.to_vec(), scaled_seeds, 6).unwrap();
        let scaled = synth_multiband(&spec, &TimeGrid::from_origin(ts, 256).unwrap()).unwrap();
        for (x, y) in one.series.samples().iter().zip(scaled.series.samples()) {
            prop_assert!((x * a - y).norm() <= 1e-12 * a * (1.0 + x.norm()));
        }
        // the sum equals the modulated basebands
        for (k, z) in one.series.samples().iter().enumerate() {
            let t = k as f64 * ts;
            let direct: num_complex::Complex64 = one
                .basebands
                .iter()
                .zip(&carriers)
                .map(|(b, &w)| b.samples()[k] * num_complex::Complex64::from_polar(1.0, -w * t))
                .sum();
            prop_assert!((z - direct).norm() <= 1e-12 * (1.0 + z.norm()));
        }
    }
}
