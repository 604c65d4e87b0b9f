use std::f64::consts::{PI, TAU};

use acspeed::diffusion::{peak_lag_for_speed, reference_point, speed_from_peak};
use acspeed::estimator::{
    align_frequency, channel_power, combine_pooled, compute_acf, estimate_speed, window_starts,
    EstimatorConfig, Window,
};
use acspeed::simulator::{synth_csi, synth_csi_for_modem, Geometry};
use acspeed::{CsiSeries, DiffusionModel, ModelKind, ModemConfig, SimScene, SOUND_SPEED};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kind() -> impl Strategy<Value = ModelKind> {
    prop_oneof![Just(ModelKind::Planar2D), Just(ModelKind::Spherical3D)]
}

fn short_scene(v: f64, seed: u64) -> SimScene {
    SimScene { duration: 2.0, ..SimScene::diffuse(Geometry::Spherical, 200, v, seed) }
}

fn small_csi(v: f64, seed: u64) -> CsiSeries {
    let cfg = ModemConfig::default();
    synth_csi(&short_scene(v, seed), cfg.otdm_csi_rate(), &cfg.subcarrier_frequencies()[..16]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn speed_times_lag_is_constant(kind in kind(), tau in 1e-3f64..1.0, f in 15e3f64..24e3) {
        let m = DiffusionModel::new(kind);
        let v = speed_from_peak(&m, tau, f).unwrap();
        let expected = reference_point(kind) * SOUND_SPEED / (TAU * f);
        prop_assert!((v * tau - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn solver_inverts_peak_lag(kind in kind(), v in 0.05f64..3.0, f in 15e3f64..24e3) {
        let m = DiffusionModel::new(kind);
        let back = speed_from_peak(&m, peak_lag_for_speed(&m, v, f), f).unwrap();
        prop_assert!((back - v).abs() <= 1e-3 * v);
    }

    #[test]
    fn solver_is_strictly_decreasing(kind in kind(), tau in 1e-3f64..1.0, step in 1e-6f64..0.5) {
        let m = DiffusionModel::new(kind);
        let a = speed_from_peak(&m, tau, 20_250.0).unwrap();
        let b = speed_from_peak(&m, tau + step, 20_250.0).unwrap();
        prop_assert!(b < a);
    }

    #[test]
    fn window_count_matches_formula(
        duration in 1.0f64..30.0,
        window in 0.2f64..1.0,
        step_frac in 0.05f64..1.0,
    ) {
        let rate = 187.5;
        let cfg = EstimatorConfig { window, step: window * step_frac, ..EstimatorConfig::default() };
        let n = (duration * rate).floor() as usize;
        let d = n as f64 / rate;
        prop_assume!(d >= window + 1e-6);
        // stay clear of floor() boundaries where rounding decides
        let q = (d - cfg.window) / cfg.step;
        prop_assume!((q - q.round()).abs() > 1e-6);
        let starts = window_starts(n, rate, &cfg);
        prop_assert_eq!(starts.len(), q.floor() as usize + 1);
        prop_assert!(starts.windows(2).all(|w| w[0] <= w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn monte_carlo_matches_closed_form(kind in kind(), x in 0.0f64..12.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 100_000;
        let sum: f64 = (0..n)
            .map(|_| {
                let projection = match kind {
                    ModelKind::Spherical3D => rng.random_range(-1.0..=1.0),
                    ModelKind::Planar2D => (rng.random_range(0.0..TAU) as f64).cos(),
                };
                (x * projection).cos()
            })
            .sum();
        let empirical = sum / n as f64;
        prop_assert!((empirical - kind.correlation(x)).abs() < 0.01, "x {x}: {empirical} vs {}", kind.correlation(x));
    }

    #[test]
    fn delay_phase_leaves_power_unchanged(tau0 in -1e-3f64..1e-3, seed in 0u64..1000) {
        let csi = small_csi(1.0, seed);
        let shifted = csi.map(|_, k, h| {
            h * Complex64::cis(-2.0 * PI * csi.subcarrier_frequencies()[k] * tau0)
        });
        let w = Window { start: 0, len: csi.n_frames() };
        let a = channel_power(&csi, w).unwrap().power();
        let b = channel_power(&shifted, w).unwrap().power();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn combined_row_is_a_correlation(v in 0.3f64..1.6, seed in 0u64..1000) {
        let csi = small_csi(v, seed);
        let cfg = EstimatorConfig::default();
        let len = cfg.window_frames(csi.csi_rate());
        let power = channel_power(&csi, Window { start: 0, len }).unwrap();
        let acf = compute_acf(&power, cfg.max_lag_frames(csi.csi_rate())).unwrap();
        let f_ref = cfg.reference_frequency(csi.subcarrier_frequencies());
        let aligned = align_frequency(&acf, f_ref, cfg.oversample).unwrap();
        let combined = combine_pooled(&acf, &aligned, &cfg).unwrap();
        prop_assert!(combined.row.iter().all(|r| (-1.0..=1.0).contains(r)));
        prop_assert!(combined.weights.iter().all(|&w| w >= 0.0));
        prop_assert!((combined.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn estimates_ignore_channel_scale(scale in 1e-3f64..1e3, seed in 0u64..1000) {
        let csi = small_csi(1.0, seed);
        let scaled = csi.map(|_, _, h| h * scale);
        let cfg = EstimatorConfig::default();
        let a = estimate_speed(&csi, &cfg).unwrap();
        let b = estimate_speed(&scaled, &cfg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.motion, y.motion);
            match (x.speed, y.speed) {
                (Some(p), Some(q)) => prop_assert!((p - q).abs() <= 1e-6 * p),
                (None, None) => {}
                _ => prop_assert!(false, "speed presence changed with scale"),
            }
        }
    }

    #[test]
    fn same_seed_same_output(seed in any::<u64>(), v in 0.1f64..2.0) {
        let cfg = ModemConfig::default();
        let scene = SimScene { duration: 1.0, ..short_scene(v, seed) };
        let a = synth_csi_for_modem(&scene, &cfg).unwrap();
        let b = synth_csi_for_modem(&scene, &cfg).unwrap();
        prop_assert!(a.frames().iter().zip(b.frames().iter()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }
}
