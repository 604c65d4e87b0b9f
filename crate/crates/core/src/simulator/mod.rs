//! Diffuse-field scene synthesis with known ground truth, at the CSI level
//! and at the audio waveform level.

mod scene;

pub use scene::*;

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

use crate::csi::CsiSeries;
use crate::dsp::SincInterpolator;
use crate::error::{invalid, Result};
use crate::modem::{full_scale, quantize, ModemConfig, Recording, TxWaveform};
use crate::SOUND_SPEED;

/// Frames between exact re-evaluations of the phasor recurrence.
const RESYNC: usize = 256;

fn noise_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn complex_noise(rng: &mut ChaCha8Rng, sigma: f64) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * sigma
}

/// Ideal CSI of `scene` sampled at `csi_rate` on `subcarriers` (Hz), plus
/// circular Gaussian noise at the scene SNR.
pub fn synth_csi(scene: &SimScene, csi_rate: f64, subcarriers: &[f64]) -> Result<CsiSeries> {
    scene.validate()?;
    if !(csi_rate > 0.0) || !csi_rate.is_finite() {
        return invalid(format!("CSI rate must be positive, got {csi_rate}"));
    }
    if subcarriers.is_empty() {
        return invalid("at least one subcarrier is required");
    }
    let n = (scene.duration * csi_rate + 1e-9).floor() as usize;
    if n < 2 {
        return invalid(format!(
            "duration {} s at {csi_rate} Hz gives fewer than two frames",
            scene.duration
        ));
    }
    let paths = scene.scatterers();
    let times: Vec<f64> = (0..n).map(|i| i as f64 / csi_rate).collect();
    let disp: Vec<f64> = times.iter().map(|&t| scene.speed.displacement(t)).collect();
    let step: Vec<f64> = (0..n - 1)
        .map(|i| match scene.speed.constant_on(times[i], times[i + 1]) {
            Some(v) => v / csi_rate,
            None => disp[i + 1] - disp[i],
        })
        .collect();

    let columns: Vec<Vec<Complex64>> = subcarriers
        .par_iter()
        .map(|&f| {
            let k = TAU * f / SOUND_SPEED;
            let mut col: Vec<Complex64> = vec![
                scene
                    .static_paths
                    .iter()
                    .map(|p| Complex64::new(p.gain[0], p.gain[1]) * Complex64::cis(-TAU * f * p.delay))
                    .sum();
                n
            ];
            for i in 0..paths.amplitude.len() {
                let (a, d, c) = (paths.amplitude[i], paths.distance[i], paths.projection[i]);
                let mut rot = Complex64::new(1.0, 0.0);
                let mut last_step = f64::NAN;
                let mut phasor = Complex64::new(0.0, 0.0);
                for t in 0..n {
                    if t % RESYNC == 0 {
                        phasor = Complex64::from_polar(a, -k * (d + disp[t] * c));
                    }
                    col[t] += phasor;
                    if t + 1 < n {
                        if step[t].to_bits() != last_step.to_bits() {
                            last_step = step[t];
                            rot = Complex64::cis(-k * c * last_step);
                        }
                        phasor *= rot;
                    }
                }
            }
            col
        })
        .collect();

    let mut frames = Array2::from_shape_fn((n, subcarriers.len()), |(t, s)| columns[s][t]);
    let noise = scene.noise_power();
    if noise > 0.0 {
        let sigma = (noise / 2.0).sqrt();
        let mut rng = noise_rng(scene.seed, 1);
        frames.iter_mut().for_each(|h| *h += complex_noise(&mut rng, sigma));
    }
    CsiSeries::new(frames, csi_rate, subcarriers.to_vec(), times)
}

/// [`synth_csi`] on the subcarrier grid and interleaved CSI rate of `cfg`.
pub fn synth_csi_for_modem(scene: &SimScene, cfg: &ModemConfig) -> Result<CsiSeries> {
    cfg.validate()?;
    synth_csi(scene, cfg.otdm_csi_rate(), &cfg.subcarrier_frequencies())
}

/// Rendered capture and its clip count.
#[derive(Debug, Clone)]
pub struct SimRecording {
    pub recording: Recording,
    pub clipped: usize,
}

/// Complex envelope of `x` about the carrier: analytic signal shifted down
/// by the same phase sequence the transmitter used.
fn complex_envelope(x: &[f64], carrier: f64, fs: f64) -> Vec<Complex64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (i, b) in buf.iter_mut().enumerate() {
        if i == 0 || (n.is_multiple_of(2) && i == n / 2) {
            continue;
        }
        *b *= if i < n.div_ceil(2) { 2.0 } else { 0.0 };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter()
        .enumerate()
        .map(|(i, b)| b / n as f64 * Complex64::cis(-carrier_phase(i, carrier, fs)))
        .collect()
}

fn carrier_phase(sample: usize, carrier: f64, fs: f64) -> f64 {
    TAU * (sample as f64 * carrier / fs).rem_euclid(1.0)
}

/// Renders what a microphone would capture when `tx` plays into `scene`:
/// each path delays the transmit signal by its time-varying length, the
/// sum is scaled, noise at the scene SNR (relative to the received dynamic
/// power) is added, and the result is quantized like the transmit PCM.
///
/// The capture has the same length as `tx`.
pub fn synth_waveform(scene: &SimScene, tx: &TxWaveform) -> Result<SimRecording> {
    scene.validate()?;
    let cfg = &tx.metadata.config;
    let fs = tx.sample_rate as f64;
    let bits = cfg.pcm_bits;
    let n = tx.pcm.len();
    if n == 0 {
        return invalid("transmit waveform is empty");
    }
    let hw = scene.waveform.interpolator_half_width;
    if hw == 0 {
        return invalid("interpolator half width must be positive");
    }
    let paths = scene.scatterers();
    let c = SOUND_SPEED;
    let end = n as f64 / fs;
    let end_disp = scene.speed.displacement(end);
    for i in 0..paths.amplitude.len() {
        let (d, p) = (paths.distance[i], paths.projection[i]);
        for len in [d, d + end_disp * p] {
            if len < 0.0 {
                return invalid(format!("scatterer {i} reaches a negative path length"));
            }
            if len / c > scene.waveform.max_delay {
                return invalid(format!(
                    "scatterer {i} delay {:.4} s exceeds the {} s buffer",
                    len / c,
                    scene.waveform.max_delay
                ));
            }
        }
    }
    if let Some(p) = scene.static_paths.iter().find(|p| p.delay > scene.waveform.max_delay) {
        return invalid(format!(
            "static delay {} s exceeds the {} s buffer",
            p.delay, scene.waveform.max_delay
        ));
    }

    let scale = full_scale(bits);
    let x: Vec<f64> = tx.pcm.iter().map(|&v| v as f64 / scale).collect();
    let tx_power = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let carrier = cfg.carrier_frequency;
    let envelope = complex_envelope(&x, carrier, fs);
    let static_power: f64 = scene.static_paths.iter().map(|p| p.gain[0].powi(2) + p.gain[1].powi(2)).sum();
    let gain = scene.waveform.gain.unwrap_or_else(|| {
        let dynamic = if paths.amplitude.is_empty() { 0.0 } else { scene.dynamic_power };
        0.5 / (static_power + dynamic).sqrt()
    });
    let interp = SincInterpolator::new(hw, 1024);
    let wc = TAU * carrier;

    const CHUNK: usize = 4096;
    let chunks: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|ci| {
            let lo = ci * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let disp: Vec<f64> = (lo..hi).map(|t| scene.speed.displacement(t as f64 / fs)).collect();
            let mut y = vec![Complex64::new(0.0, 0.0); hi - lo];
            for p in &scene.static_paths {
                let g = Complex64::new(p.gain[0], p.gain[1]) * Complex64::cis(-wc * p.delay);
                for (j, out) in y.iter_mut().enumerate() {
                    *out += g * interp.sample(&envelope, (lo + j) as f64 - p.delay * fs);
                }
            }
            for i in 0..paths.amplitude.len() {
                let (a, d, pr) = (paths.amplitude[i], paths.distance[i], paths.projection[i]);
                for (j, out) in y.iter_mut().enumerate() {
                    let tau = (d + disp[j] * pr) / c;
                    *out += Complex64::from_polar(a, -wc * tau)
                        * interp.sample(&envelope, (lo + j) as f64 - tau * fs);
                }
            }
            y.iter()
                .enumerate()
                .map(|(j, v)| gain * (v * Complex64::cis(carrier_phase(lo + j, carrier, fs))).re)
                .collect()
        })
        .collect();
    let mut signal: Vec<f64> = chunks.into_iter().flatten().collect();

    let snr = scene.snr_db;
    if snr != f64::INFINITY {
        let sigma = (gain * gain * scene.dynamic_power * tx_power / 10f64.powf(snr / 10.0)).sqrt();
        let mut rng = noise_rng(scene.seed, 2);
        for s in signal.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *s += sigma * z;
        }
    }
    let (pcm, clipped) = quantize(&signal, bits);
    Ok(SimRecording { recording: Recording { pcm, sample_rate: tx.sample_rate, pcm_bits: bits }, clipped })
}
