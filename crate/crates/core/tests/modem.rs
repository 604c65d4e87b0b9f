use acspeed::estimator::{estimate_speed, EstimatorConfig};
use acspeed::modem::generate_tx;
use acspeed::simulator::{synth_waveform, Geometry};
use acspeed::{Decoder, ModemConfig, Recording, SimScene};
use rustfft::{num_complex::Complex64, FftPlanner};

fn decoder() -> Decoder {
    Decoder::new(&ModemConfig::default()).unwrap()
}

#[test]
fn transmit_spectrum_sits_around_the_carrier() {
    let cfg = ModemConfig::default();
    let tx = generate_tx(&cfg, 64).unwrap();
    let mut buf: Vec<Complex64> = tx.pcm.iter().map(|&v| Complex64::new(v as f64, 0.0)).collect();
    let n = buf.len();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = 48_000.0 / n as f64;
    let half = cfg.occupied_bandwidth() / 2.0 + 200.0;
    let (mut inside, mut total) = (0.0, 0.0);
    for (i, b) in buf.iter().enumerate().take(n / 2) {
        let p = b.norm_sqr();
        total += p;
        if (i as f64 * df - cfg.carrier_frequency).abs() <= half {
            inside += p;
        }
    }
    assert!(inside / total > 0.99, "in-band share {}", inside / total);
}

#[test]
fn loopback_decodes_flat_csi_at_double_rate() {
    let tx = generate_tx(&ModemConfig::default(), 200).unwrap();
    let decoded = decoder().decode(&tx.recording()).unwrap();
    let csi = &decoded.csi;
    assert_eq!(csi.csi_rate(), 187.5);
    assert_eq!(csi.n_frames(), 400);
    for w in csi.timestamps().windows(2) {
        assert!((w[1] - w[0] - 256.0 / 48_000.0).abs() < 1e-12);
    }
    // the receive filter needs a few frames to settle at either end
    for t in 4..csi.n_frames() - 4 {
        for h in csi.frames().row(t) {
            assert!((h - Complex64::new(1.0, 0.0)).norm() < 0.02, "frame {t}: {h}");
        }
    }
}

#[test]
fn static_scene_decodes_to_constant_csi() {
    let cfg = ModemConfig::default();
    let tx = generate_tx(&cfg, 400).unwrap();
    let scene = SimScene {
        num_scatterers: 0,
        snr_db: 30.0,
        duration: tx.pcm.len() as f64 / 48_000.0,
        ..SimScene::diffuse(Geometry::Spherical, 0, 0.0, 5)
    };
    let rec = synth_waveform(&scene, &tx).unwrap().recording;
    let csi = decoder().decode(&rec).unwrap().csi;
    let frames = csi.frames();
    // skip the first frames while the echo fills the buffer
    for k in 0..csi.n_subcarriers() {
        let col: Vec<Complex64> = (4..csi.n_frames()).map(|t| frames[[t, k]]).collect();
        let mean = col.iter().sum::<Complex64>() / col.len() as f64;
        let spread = (col.iter().map(|h| (h - mean).norm_sqr()).sum::<f64>() / col.len() as f64).sqrt();
        assert!(spread < 0.1 * mean.norm(), "subcarrier {k}: spread {spread} mean {}", mean.norm());
    }
}

#[test]
fn wrong_sample_rate_is_rejected() {
    let mut rec: Recording = generate_tx(&ModemConfig::default(), 10).unwrap().recording();
    rec.sample_rate = 44_100;
    assert!(decoder().decode(&rec).is_err());
}

#[test]
fn end_to_end_waveform_recovers_walking_speed() {
    let cfg = ModemConfig::default();
    let tx = generate_tx(&cfg, 375).unwrap();
    let v = 1.0;
    let scene = SimScene {
        duration: tx.pcm.len() as f64 / 48_000.0,
        ..SimScene::diffuse(Geometry::Spherical, 200, v, 4)
    };
    let sim = synth_waveform(&scene, &tx).unwrap();
    assert_eq!(sim.clipped, 0);
    let csi = decoder().decode(&sim.recording).unwrap().csi;
    let est = estimate_speed(&csi, &EstimatorConfig::default()).unwrap();
    let speeds: Vec<f64> = est.iter().filter_map(|e| e.speed).collect();
    assert!(speeds.len() * 10 >= est.len() * 9, "{} of {} windows", speeds.len(), est.len());
    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    assert!((mean - v).abs() < 0.1 * v, "mean {mean}");
}
