mod common;

use std::f64::consts::TAU;

use common::{binom, c, fir_valid, multiband, vieta_taps};
use mbunfold::filter::{
    build_psi, build_psi_power, convolve, difference_power, esp_coefficients,
    normalize_for_recovery, psi_power, verify_commutation_identity, ExponentSign,
};
use mbunfold::io::{read_taps, write_taps};
use num_complex::Complex64;
use proptest::prelude::*;

/// Distinct carriers in `[0, 2π/T)`, separated by at least `1e-3·2π/T`.
fn carriers(max_p: usize) -> impl Strategy<Value = (Vec<f64>, f64)> {
    (
        prop::collection::vec(0.0f64..1.0, 1..=max_p),
        prop_oneof![Just(1.0), 1e-6f64..1e-2],
    )
        .prop_filter_map("carriers too close", |(u, ts)| {
            let mut s = u.clone();
            s.sort_by(f64::total_cmp);
            let ok = s.windows(2).all(|w| w[1] - w[0] > 1e-3)
                && (s.len() < 2 || s[0] + 1.0 - s[s.len() - 1] > 1e-3);
            ok.then(|| (u.iter().map(|x| x * TAU / ts).collect(), ts))
        })
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn taps_match_vieta_and_subsets((w, ts) in carriers(8)) {
        let p = w.len();
        let psi = build_psi(&w, ts).unwrap();
        let v = vieta_taps(&w, ts);
        prop_assert_eq!(psi.len(), p + 1);
        for k in 0..=p {
            let tol = 4.0 * f64::EPSILON * binom(p, k) * (p as f64);
            prop_assert!(close(psi.taps[k], v[k], tol), "k={} {} vs {}", k, psi.taps[k], v[k]);
            let e = esp_coefficients(&w, ts, k).unwrap();
            let sign = if (p - k) % 2 == 0 { 1.0 } else { -1.0 };
            let tol = 4.0 * f64::EPSILON * binom(p, k).max(1.0) * (p as f64).max(1.0);
            prop_assert!(close(psi.taps[k], e * sign, tol));
        }
        let n = normalize_for_recovery(&psi).unwrap();
        prop_assert_eq!(n.taps[0], c(1.0, 0.0));
        for k in 1..=p {
            let e = esp_coefficients(&w, ts, k).unwrap();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let tol = 4.0 * f64::EPSILON * binom(p, k) * (p as f64);
            prop_assert!(close(n.taps[k], e * sign, tol));
        }
    }

    #[test]
    fn every_carrier_is_a_zero((w, ts) in carriers(8), order in 1usize..=4) {
        let f = build_psi_power(&w, ts, order).unwrap();
        let scale = f.l1_norm();
        for &wp in &w {
            prop_assert!(f.tone_gain(wp) < 1e-9 * scale, "gain {}", f.tone_gain(wp));
            prop_assert!(f.tone_gain(wp + TAU / ts) < 1e-9 * scale);
            // a tone at the carrier is removed by direct filtering too
            let tone: Vec<Complex64> = (0..64)
                .map(|k| Complex64::from_polar(1.0, -wp * k as f64 * ts))
                .collect();
            let out = fir_valid(&tone, &f.taps);
            prop_assert!(out.iter().all(|z| z.norm() < 1e-9 * scale));
        }
    }

    #[test]
    fn l1_bounds((w, ts) in carriers(6), order in 1usize..=12) {
        let p = w.len();
        let f = build_psi_power(&w, ts, order).unwrap();
        let bound = 2f64.powi((order * p) as i32);
        prop_assert!(f.l1_norm() <= bound * (1.0 + 1e-12));
        for q in 0..p {
            let rest: Vec<f64> = w.iter().enumerate().filter(|&(i, _)| i != q).map(|(_, &x)| x).collect();
            if rest.is_empty() {
                continue;
            }
            let g = build_psi_power(&rest, ts, order).unwrap();
            prop_assert!(g.l1_norm() <= 2f64.powi((order * (p - 1)) as i32) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn power_is_repeated_convolution((w, ts) in carriers(5), order in 1usize..=6) {
        let base = build_psi(&w, ts).unwrap();
        let f = psi_power(&base, order).unwrap();
        // independent: binary exponentiation with the generic convolution
        let mut acc = vec![c(1.0, 0.0)];
        let mut sq = base.taps.clone();
        let mut n = order;
        while n > 0 {
            if n & 1 == 1 {
                acc = convolve(&acc, &sq);
            }
            sq = convolve(&sq, &sq);
            n >>= 1;
        }
        prop_assert_eq!(acc.len(), f.len());
        // the absolute-value convolution bounds the rounding scale
        let scale = 2f64.powi((order * w.len()) as i32);
        for (a, b) in acc.iter().zip(&f.taps) {
            prop_assert!(close(*a, *b, 8.0 * f64::EPSILON * scale * (order * w.len()) as f64));
        }
    }

    #[test]
    fn aliased_carriers_give_the_same_filter((w, ts) in carriers(6), shifts in prop::collection::vec(-3i32..=3, 6)) {
        let shifted: Vec<f64> = w.iter().zip(&shifts).map(|(x, &s)| x + s as f64 * TAU / ts).collect();
        let a = build_psi(&w, ts).unwrap();
        let b = build_psi(&shifted, ts).unwrap();
        let p = w.len();
        for (x, y) in a.taps.iter().zip(&b.taps) {
            prop_assert!(close(*x, *y, 1e-12 * binom(p, p / 2) * 8.0));
        }
    }

    #[test]
    fn normalization_is_idempotent((w, ts) in carriers(6), order in 1usize..=4) {
        let f = build_psi_power(&w, ts, order).unwrap();
        let n = normalize_for_recovery(&f).unwrap();
        prop_assert!((n.normalizer.norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(n.taps[0], c(1.0, 0.0));
        let again = normalize_for_recovery(&n).unwrap();
        prop_assert_eq!(&again, &n);
        for (a, b) in n.taps.iter().zip(&f.taps) {
            prop_assert!(close(a * n.normalizer, *b, 1e-12 * f.l1_norm()));
        }
    }

    #[test]
    fn taps_round_trip_through_json((w, ts) in carriers(6), order in 1usize..=3) {
        let f = normalize_for_recovery(&build_psi_power(&w, ts, order).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("taps.json");
        write_taps(&path, &f).unwrap();
        prop_assert_eq!(read_taps(&path).unwrap(), f);
    }
}

#[test]
fn single_dc_carrier_is_the_difference() {
    let f = build_psi(&[0.0], 1.0).unwrap();
    assert_eq!(f.taps, vec![c(-1.0, 0.0), c(1.0, 0.0)]);
    for n in 1..8 {
        let g = build_psi_power(&[0.0], 1.0, n).unwrap();
        let d = difference_power(n);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..=n {
            assert_eq!(d[k].re, sign * (-1f64).powi(k as i32) * binom(n, k));
            assert!(close(g.taps[k], d[k], 1e-12));
        }
    }
}

#[test]
fn commutation_identity_holds_with_negative_sign() {
    let ts = 1e-3;
    let mut worst = 0.0f64;
    let mut positive_closes = 0;
    for case in 0..100u64 {
        let p = 1 + (case % 4) as usize;
        let order = 1 + (case / 4 % 3) as usize;
        let w: Vec<f64> = (0..p)
            .map(|i| (0.11 + 0.23 * i as f64 + 0.013 * case as f64) * TAU / ts % (TAU / ts))
            .collect();
        let sig = multiband(&w, 40.0, ts, 256, 6, case, None);
        for band in 0..p {
            let phi = &sig.basebands[band];
            let peak = phi.peak_modulus();
            let neg = verify_commutation_identity(phi, &w, band, order, ExponentSign::Negative).unwrap();
            worst = worst.max(neg / peak);
            let pos = verify_commutation_identity(phi, &w, band, order, ExponentSign::Positive).unwrap();
            // conjugation is invisible for carriers at 0 and π/T
            let r = (w[band] * ts / TAU).rem_euclid(0.5);
            let real_root = r.min(0.5 - r) < 1e-6;
            if pos < 1e-9 * peak && !real_root {
                positive_closes += 1;
            }
        }
    }
    assert!(worst < 1e-9, "{worst}");
    assert_eq!(positive_closes, 0);
}
