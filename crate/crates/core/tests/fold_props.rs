use std::f64::consts::PI;

use mbunfold::modulo::{
    fold_complex, fold_scalar, fold_series, quantize, quantizer_step, residual_oracle, Channels,
    FoldedSeries, ModuloConfig, NoisePlacement,
};
use mbunfold::ComplexSeries;
use num_complex::Complex64;
use proptest::prelude::*;

fn lambda() -> impl Strategy<Value = f64> {
    prop_oneof![1e-3f64..1e3, Just(1.0), Just(0.43), Just(0.1)]
}

fn phase_fold(v: f64, lam: f64) -> f64 {
    lam / PI * Complex64::from_polar(1.0, PI * v / lam).arg()
}

/// `v - M(v)` lies on the `2λ` lattice up to a few ulps of `v`.
fn lattice_error(v: f64, f: f64, lam: f64) -> f64 {
    let m = ((v - f) / (2.0 * lam)).round();
    ((-2.0 * lam).mul_add(m, v) - f).abs()
}

fn ulp(v: f64) -> f64 {
    let a = v.abs().max(f64::MIN_POSITIVE);
    f64::from_bits(a.to_bits() + 1) - a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn fold_is_idempotent_and_in_range(lam in lambda(), s in -1e6f64..1e6) {
        let v = s * lam;
        let f = fold_scalar(v, lam);
        prop_assert!(f >= -lam && f < lam, "{v} -> {f}");
        prop_assert_eq!(fold_scalar(f, lam).to_bits(), f.to_bits());
        prop_assert!(lattice_error(v, f, lam) <= 4.0 * ulp(v));
    }

    #[test]
    fn fold_is_identity_inside(lam in lambda(), u in -1.0f64..1.0) {
        let v = u * lam;
        if v < lam {
            prop_assert_eq!(fold_scalar(v, lam).to_bits(), v.to_bits());
        }
    }

    #[test]
    fn fold_matches_phase_form_away_from_edge(lam in lambda(), s in -50.0f64..50.0) {
        let v = s * lam;
        let f = fold_scalar(v, lam);
        if (f.abs() - lam).abs() > 1e-9 * lam {
            prop_assert!((f - phase_fold(v, lam)).abs() <= 1e-9 * lam.max(v.abs()));
        }
    }

    #[test]
    fn fold_complex_is_componentwise(lam in lambda(), a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let z = fold_complex(Complex64::new(a, b), lam);
        prop_assert_eq!(z.re.to_bits(), fold_scalar(a, lam).to_bits());
        prop_assert_eq!(z.im.to_bits(), fold_scalar(b, lam).to_bits());
    }

    #[test]
    fn residual_is_integral(seed in any::<u64>(), n in 1usize..200, ratio in 1.5f64..50.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let x = ComplexSeries::new(x, 1.0, 0).unwrap();
        let lam = x.peak_amplitude() / ratio;
        let y = fold_series(&x, &ModuloConfig::new(lam)).unwrap();
        let r = residual_oracle(&x, &y).unwrap();
        for k in 0..n {
            let back = y.samples()[k] + r.value(k, lam);
            prop_assert!((back - x.samples()[k]).norm() <= 1e-12 * (1.0 + lam));
        }
    }

    #[test]
    fn quantizer_error_and_range(bits in 1u32..16, lam in lambda(), u in -1.0f64..1.0) {
        let v = u * lam;
        let y = FoldedSeries::new(ComplexSeries::from_real(&[v], 1.0, 0).unwrap(), ModuloConfig::new(lam)).unwrap();
        let q = quantize(&y, bits).unwrap().samples()[0].re;
        let step = quantizer_step(lam, bits);
        prop_assert!(q >= -lam && q < lam);
        prop_assert!((q - v).abs() <= 0.5 * step * (1.0 + 1e-12));
    }
}

#[test]
fn boundaries_are_half_open() {
    for &lam in &[1.0, 0.43, 1e-3, 7.5] {
        for m in -20i32..=20 {
            let edge = (2 * m + 1) as f64 * lam;
            for v in [edge, -edge, f64::from_bits(edge.to_bits() + 1), f64::from_bits(edge.to_bits() - 1)] {
                let f = fold_scalar(v, lam);
                assert!(f >= -lam && f < lam, "λ={lam} v={v} -> {f}");
                assert_eq!(fold_scalar(f, lam), f);
            }
        }
        assert_eq!(fold_scalar(lam, lam), -lam);
        assert_eq!(fold_scalar(-lam, lam), -lam);
    }
}

#[test]
fn hardware_quantizer_grid() {
    let lam = 0.43;
    let cfg = ModuloConfig::new(lam).with_bits(7);
    let x: Vec<f64> = (0..5000).map(|k| 5.91 * (k as f64 * 0.0131).sin()).collect();
    let y = fold_series(&ComplexSeries::from_real(&x, 1.3e-3, 0).unwrap(), &cfg).unwrap();
    let step = 0.00671875;
    for z in y.samples() {
        assert!(z.re >= -lam && z.re < lam);
        let idx = (z.re + lam) / step - 0.5;
        assert!((idx - idx.round()).abs() < 1e-9, "{}", z.re);
    }
}

#[test]
fn post_fold_noise_matches_requested_snr() {
    let n = 20_000;
    let x: Vec<f64> = (0..n).map(|k| 3.0 * (0.01 * k as f64).sin()).collect();
    let x = ComplexSeries::from_real(&x, 1.0, 0).unwrap();
    let clean = fold_series(&x, &ModuloConfig::new(1.0).with_channels(Channels::RealOnly)).unwrap();
    let cfg = ModuloConfig::new(1.0)
        .with_channels(Channels::RealOnly)
        .with_noise(20.0, 3, NoisePlacement::PostFold);
    let noisy = fold_series(&x, &cfg).unwrap();
    let signal = clean.series().power();
    let noise: f64 = noisy
        .samples()
        .iter()
        .zip(clean.samples())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / n as f64;
    let snr = 10.0 * (signal / noise).log10();
    assert!((snr - 20.0).abs() < 0.2, "{snr}");
}
