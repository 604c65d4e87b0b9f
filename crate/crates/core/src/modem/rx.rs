//! Receive chain: I/Q demodulation, correlation channel estimation and
//! interleaving of the two branch series.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::ModemConfig;
use super::tx::{branch_template, otdm_baseband, BasebandFrame, PhaseAccumulator, Recording, PASSBAND_SCALE};
use super::Branch;
use crate::csi::CsiSeries;
use crate::dsp::{bin_position, fft_unitary, filter_zero_phase, ifft_unitary, lowpass_fir};
use crate::error::{invalid, Result};
use crate::sequences::PnSequence;

/// Channel impulse response of one probe period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirFrame {
    pub taps: Vec<Complex64>,
    pub frame_index: usize,
    pub branch: Branch,
}

impl CirFrame {
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Index and magnitude of the strongest tap.
    pub fn peak(&self) -> (usize, f64) {
        self.taps.iter().enumerate().map(|(i, c)| (i, c.norm())).fold((0, f64::NEG_INFINITY), |a, b| {
            if b.1 > a.1 {
                b
            } else {
                a
            }
        })
    }
}

/// Mixes the recording down to complex baseband, `y = LPF(2 r e^{-j phi})`.
///
/// The low-pass is applied zero-phase, so sample `n` of the output lines up
/// with sample `n` of the transmit framing.
pub fn demodulate(rec: &Recording, cfg: &ModemConfig) -> Result<Vec<Complex64>> {
    if rec.sample_rate != cfg.audio_sample_rate {
        return invalid(format!(
            "recording is {} Hz but the modem runs at {} Hz",
            rec.sample_rate, cfg.audio_sample_rate
        ));
    }
    demodulate_samples(&rec.normalized(), cfg)
}

/// [`demodulate`] on samples already scaled to [-1, 1].
pub fn demodulate_samples(samples: &[f64], cfg: &ModemConfig) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let mut phase = PhaseAccumulator::new(cfg.carrier_frequency, cfg.sample_rate());
    let mixed: Vec<Complex64> =
        samples.iter().map(|&r| Complex64::from_polar(2.0 * r, -phase.next_radians())).collect();
    let taps = lowpass_fir(cfg.lpf_taps, cfg.lpf_cutoff, cfg.sample_rate());
    Ok(filter_zero_phase(&mixed, &taps))
}

fn branch_of(seq: &PnSequence, cfg: &ModemConfig) -> Result<Branch> {
    match cfg.sequence_indices.iter().position(|&i| i == seq.index()) {
        Some(0) => Ok(Branch::One),
        Some(_) => Ok(Branch::Two),
        None => invalid(format!(
            "sequence member {} is not one of the configured branches {:?}",
            seq.index(),
            cfg.sequence_indices
        )),
    }
}

/// Per-frame circular correlation of the stream against the band-modulated
/// template of `seq`.
///
/// Branch-1 frames start at sample 0 and branch-2 frames at `N_s / 2`; only
/// whole frames are used. Taps are scaled so a unit echo of the template
/// gives a unit tap.
pub fn estimate_cir(baseband: &[Complex64], seq: &PnSequence, cfg: &ModemConfig) -> Result<Vec<CirFrame>> {
    let branch = branch_of(seq, cfg)?;
    let template = super::tx::band_modulate(seq, cfg)?;
    let start = match branch {
        Branch::One => 0,
        Branch::Two => cfg.branch_delay(),
    };
    let ns = cfg.frame_length;
    if baseband.len() < start + ns {
        return invalid(format!("stream of {} samples holds no full frame", baseband.len()));
    }
    let count = (baseband.len() - start) / ns;
    Ok(correlate_frames(baseband, &template, branch, start, count))
}

/// Correlates `count` consecutive frames starting at `start`.
pub fn correlate_frames(
    baseband: &[Complex64],
    template: &BasebandFrame,
    branch: Branch,
    start: usize,
    count: usize,
) -> Vec<CirFrame> {
    let ns = template.samples().len();
    let spectrum = template.spectrum();
    let energy = template.energy();
    // the quadrature branch rides on +j; undo it so an identity channel
    // gives a real positive tap
    let rotate = match branch {
        Branch::One => Complex64::new(1.0, 0.0),
        Branch::Two => Complex64::new(0.0, -1.0),
    };
    let scale = rotate * ((ns as f64).sqrt() / energy);
    (0..count)
        .map(|m| {
            let lo = start + m * ns;
            let mut buf = baseband[lo..lo + ns].to_vec();
            fft_unitary(&mut buf);
            for (y, b) in buf.iter_mut().zip(&spectrum) {
                *y *= b.conj();
            }
            ifft_unitary(&mut buf);
            for y in &mut buf {
                *y *= scale;
            }
            CirFrame { taps: buf, frame_index: m, branch }
        })
        .collect()
}

/// Frequency response of a CIR on the occupied subcarriers, ascending.
/// A unit tap at delay 0 maps to 1 on every subcarrier.
pub fn cir_to_csi(cir: &CirFrame, cfg: &ModemConfig) -> Result<Vec<Complex64>> {
    let ns = cfg.frame_length;
    if cir.taps.len() != ns {
        return invalid(format!("CIR has {} taps, expected {ns}", cir.taps.len()));
    }
    let mut spec = cir.taps.clone();
    fft_unitary(&mut spec);
    let gain = (ns as f64).sqrt();
    Ok(cfg.occupied_bins().into_iter().map(|k| spec[bin_position(k, ns)] * gain).collect())
}

/// Raw CSI that an ideal channel produces in one branch's window while both
/// branches transmit, including the transmit gain.
///
/// Each window also holds a half-period rotation of the other probe, which
/// imprints a different static response on the two branches. Dividing the
/// raw CSI by this reference makes both branches report the same channel.
pub fn branch_reference(cfg: &ModemConfig, branch: Branch) -> Result<Vec<Complex64>> {
    let b1 = branch_template(cfg, Branch::One)?;
    let b2 = branch_template(cfg, Branch::Two)?;
    let ns = cfg.frame_length;
    let gain = cfg.amplitude * PASSBAND_SCALE;
    let stream: Vec<Complex64> =
        otdm_baseband(b1.samples(), b2.samples(), ns, 3).into_iter().map(|x| x * gain).collect();
    let (template, start) = match branch {
        Branch::One => (b1, 0),
        Branch::Two => (b2, cfg.branch_delay()),
    };
    // second period is free of the zero prefix / tail
    let cir = correlate_frames(&stream, &template, branch, start + ns, 1);
    cir_to_csi(&cir[0], cfg)
}

/// Frame offset (samples) of the strongest echo, from the mean CIR
/// magnitude of branch 1 over the first second.
pub fn acquire_sync(baseband: &[Complex64], template: &BasebandFrame, cfg: &ModemConfig) -> usize {
    let ns = cfg.frame_length;
    let span = baseband.len().min(cfg.audio_sample_rate as usize);
    let count = (span / ns).max(1).min(baseband.len() / ns);
    if count == 0 {
        return 0;
    }
    let frames = correlate_frames(baseband, template, Branch::One, 0, count);
    let mut mean = vec![0.0; ns];
    for f in &frames {
        for (m, t) in mean.iter_mut().zip(&f.taps) {
            *m += t.norm();
        }
    }
    mean.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &v)| if v > a.1 { (i, v) } else { a }).0
}

/// Alternating merge `[H1(1), H2(1), H1(2), H2(2), ...]` of two branch
/// series whose timestamps are half a period apart.
pub fn otdm_interleave(h1: &CsiSeries, h2: &CsiSeries) -> Result<CsiSeries> {
    if h1.n_frames() != h2.n_frames() {
        return invalid(format!("branch series have {} and {} frames", h1.n_frames(), h2.n_frames()));
    }
    if h1.subcarrier_frequencies() != h2.subcarrier_frequencies() {
        return invalid("branch series use different subcarrier grids");
    }
    if (h1.csi_rate() - h2.csi_rate()).abs() > 1e-9 * h1.csi_rate() {
        return invalid("branch series have different CSI rates");
    }
    let half = 0.5 / h1.csi_rate();
    let aligned = h1.timestamps().iter().zip(h2.timestamps()).all(|(a, b)| ((b - a) - half).abs() < 1e-9);
    if !aligned {
        return invalid("branch-2 timestamps are not offset by half a frame");
    }
    let n = h1.n_frames();
    let nf = h1.n_subcarriers();
    let mut frames = Array2::zeros((2 * n, nf));
    let mut timestamps = Vec::with_capacity(2 * n);
    for t in 0..n {
        frames.row_mut(2 * t).assign(&h1.frames().row(t));
        frames.row_mut(2 * t + 1).assign(&h2.frames().row(t));
        timestamps.push(h1.timestamps()[t]);
        timestamps.push(h2.timestamps()[t]);
    }
    CsiSeries::new(frames, 2.0 * h1.csi_rate(), h1.subcarrier_frequencies().to_vec(), timestamps)
}

/// Result of decoding one recording.
#[derive(Debug, Clone)]
pub struct Decoded {
    /// Interleaved series at twice the per-branch rate.
    pub csi: CsiSeries,
    pub branch1: CsiSeries,
    pub branch2: CsiSeries,
    /// Sample offset of the frame grid.
    pub sync_offset: usize,
}

/// Offline OTDM decoder: demodulation, sync, per-branch CIR/CSI with
/// reference calibration, interleaving.
#[derive(Debug, Clone)]
pub struct Decoder {
    cfg: ModemConfig,
    templates: [BasebandFrame; 2],
    references: [Vec<Complex64>; 2],
}

impl Decoder {
    pub fn new(cfg: &ModemConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.amplitude == 0.0 {
            return invalid("cannot decode with a zero transmit amplitude");
        }
        Ok(Self {
            cfg: cfg.clone(),
            templates: [branch_template(cfg, Branch::One)?, branch_template(cfg, Branch::Two)?],
            references: [branch_reference(cfg, Branch::One)?, branch_reference(cfg, Branch::Two)?],
        })
    }

    pub fn config(&self) -> &ModemConfig {
        &self.cfg
    }

    pub fn decode(&self, rec: &Recording) -> Result<Decoded> {
        let baseband = demodulate(rec, &self.cfg)?;
        self.decode_baseband(&baseband)
    }

    pub fn decode_baseband(&self, baseband: &[Complex64]) -> Result<Decoded> {
        let cfg = &self.cfg;
        let ns = cfg.frame_length;
        let delay = cfg.branch_delay();
        if baseband.len() < ns + delay {
            return invalid(format!(
                "recording of {} samples is shorter than one OTDM frame",
                baseband.len()
            ));
        }
        let offset = acquire_sync(baseband, &self.templates[0], cfg);
        // both branches need whole frames; a trailing partial frame is dropped
        let mut count = (baseband.len() - offset).saturating_sub(delay) / ns;
        if count == 0 {
            count = 1;
        }
        let offset = offset.min(baseband.len() - delay - count * ns);
        let fs = cfg.sample_rate();
        let branch = |b: Branch| -> Result<CsiSeries> {
            let start = offset + if b == Branch::Two { delay } else { 0 };
            let cirs = correlate_frames(baseband, &self.templates[b.slot()], b, start, count);
            let reference = &self.references[b.slot()];
            let nf = reference.len();
            let mut frames = Array2::zeros((count, nf));
            for (t, cir) in cirs.iter().enumerate() {
                let row = cir_to_csi(cir, cfg)?;
                for (k, (h, c)) in row.iter().zip(reference).enumerate() {
                    frames[[t, k]] = h / c;
                }
            }
            CsiSeries::uniform(frames, cfg.branch_csi_rate(), cfg.subcarrier_frequencies(), start as f64 / fs)
        };
        let branch1 = branch(Branch::One)?;
        let branch2 = branch(Branch::Two)?;
        let csi = otdm_interleave(&branch1, &branch2)?;
        Ok(Decoded { csi, branch1, branch2, sync_offset: offset })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::generate_tx;

    fn cfg() -> ModemConfig {
        ModemConfig::default()
    }

    #[test]
    fn delta_cir_gives_flat_csi() {
        let mut taps = vec![Complex64::new(0.0, 0.0); 512];
        taps[0] = Complex64::new(1.0, 0.0);
        let cir = CirFrame { taps: taps.clone(), frame_index: 0, branch: Branch::One };
        let csi = cir_to_csi(&cir, &cfg()).unwrap();
        assert_eq!(csi.len(), 63);
        assert!(csi.iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-12));

        taps[0] = Complex64::new(0.0, 0.0);
        taps[5] = Complex64::new(1.0, 0.0);
        let cir = CirFrame { taps, frame_index: 0, branch: Branch::One };
        let csi = cir_to_csi(&cir, &cfg()).unwrap();
        let bins = cfg().occupied_bins();
        for (c, k) in csi.iter().zip(bins) {
            assert!((c.norm() - 1.0).abs() < 1e-12);
            let want = Complex64::from_polar(1.0, -std::f64::consts::TAU * 5.0 * k as f64 / 512.0);
            assert!((c - want).norm() < 1e-12);
        }
    }

    #[test]
    fn cir_to_csi_checks_shape() {
        let cir = CirFrame { taps: vec![Complex64::new(0.0, 0.0); 100], frame_index: 0, branch: Branch::One };
        assert!(cir_to_csi(&cir, &cfg()).is_err());
    }

    #[test]
    fn silence_demodulates_to_zero() {
        let y = demodulate_samples(&vec![0.0; 4096], &cfg()).unwrap();
        assert!(y.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn carrier_tone_maps_to_dc() {
        let c = cfg();
        let tone: Vec<f64> = (0..8192)
            .map(|n| 0.5 * (std::f64::consts::TAU * c.carrier_frequency * n as f64 / c.sample_rate()).cos())
            .collect();
        let y = demodulate_samples(&tone, &c).unwrap();
        for v in &y[1000..7000] {
            assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-3, "{v}");
        }
    }

    #[test]
    fn sample_rate_mismatch() {
        let rec = Recording { pcm: vec![0; 2048], sample_rate: 44_100, pcm_bits: 16 };
        assert!(demodulate(&rec, &cfg()).is_err());
    }

    #[test]
    fn loopback_is_flat_and_doubled() {
        let tx = generate_tx(&cfg(), 40).unwrap();
        let out = Decoder::new(&cfg()).unwrap().decode(&tx.recording()).unwrap();
        assert_eq!(out.sync_offset, 0);
        assert_eq!(out.csi.csi_rate(), 187.5);
        assert_eq!(out.csi.n_frames(), 80);
        // interior frames see an identity channel on every subcarrier
        for t in 4..76 {
            for h in out.csi.frames().row(t) {
                assert!((h - Complex64::new(1.0, 0.0)).norm() < 2e-2, "frame {t}: {h}");
            }
        }
    }

    #[test]
    fn pure_delay_moves_the_peak() {
        let c = cfg();
        let tx = generate_tx(&c, 6).unwrap();
        let mut x = tx.recording().normalized();
        let d = 37;
        x.splice(0..0, std::iter::repeat_n(0.0, d));
        let y = demodulate_samples(&x, &c).unwrap();
        let seq = crate::sequences::generate_kasami(6, 0).unwrap();
        let cirs = estimate_cir(&y, &seq, &c).unwrap();
        for f in &cirs[1..5] {
            assert_eq!(f.peak().0, d);
        }
    }

    #[test]
    fn interleave_rejects_mismatch() {
        let a = CsiSeries::uniform(Array2::zeros((3, 2)), 10.0, vec![1.0, 2.0], 0.0).unwrap();
        let b = CsiSeries::uniform(Array2::zeros((4, 2)), 10.0, vec![1.0, 2.0], 0.05).unwrap();
        assert!(otdm_interleave(&a, &b).is_err());
        let b = CsiSeries::uniform(Array2::zeros((3, 2)), 10.0, vec![1.0, 3.0], 0.05).unwrap();
        assert!(otdm_interleave(&a, &b).is_err());
        let b = CsiSeries::uniform(Array2::zeros((3, 2)), 10.0, vec![1.0, 2.0], 0.05).unwrap();
        let m = otdm_interleave(&a, &b).unwrap();
        assert_eq!(m.n_frames(), 6);
        assert_eq!(m.csi_rate(), 20.0);
    }
}
