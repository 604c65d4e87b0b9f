use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::SOUND_SPEED;

/// Transmit/receive parameters of the sounding modem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModemConfig {
    /// Audio sample rate `f_s` in Hz.
    pub audio_sample_rate: u32,
    /// Samples per probe frame `N_s`.
    pub frame_length: usize,
    /// Carrier `f_c` in Hz.
    pub carrier_frequency: f64,
    /// LFSR degree of the Kasami sequences.
    pub sequence_degree: u32,
    /// Small-set members used for the in-phase and delayed quadrature branch.
    pub sequence_indices: [u32; 2],
    /// Baseband scale applied before PCM coding.
    pub amplitude: f64,
    /// Receive low-pass cutoff in Hz.
    pub lpf_cutoff: f64,
    /// Receive low-pass length (odd).
    pub lpf_taps: usize,
    pub pcm_bits: u16,
    /// Speed of sound used to convert frequencies to wavelengths.
    pub sound_speed: f64,
}

impl Default for ModemConfig {
    fn default() -> Self {
        Self {
            audio_sample_rate: 48_000,
            frame_length: 512,
            carrier_frequency: 20_250.0,
            sequence_degree: 6,
            sequence_indices: [0, 1],
            amplitude: 2.5,
            lpf_cutoff: 3_500.0,
            lpf_taps: 255,
            pcm_bits: 16,
            sound_speed: SOUND_SPEED,
        }
    }
}

impl ModemConfig {
    pub fn sample_rate(&self) -> f64 {
        f64::from(self.audio_sample_rate)
    }

    /// Chips per sequence, `2^degree - 1`.
    pub fn sequence_length(&self) -> usize {
        (1usize << self.sequence_degree) - 1
    }

    /// Occupied bandwidth `N / N_s * f_s` in Hz.
    pub fn occupied_bandwidth(&self) -> f64 {
        self.sequence_length() as f64 / self.frame_length as f64 * self.sample_rate()
    }

    /// Spacing of subcarriers, `f_s / N_s`.
    pub fn bin_spacing(&self) -> f64 {
        self.sample_rate() / self.frame_length as f64
    }

    /// Half-frame delay of the quadrature branch, in samples.
    pub fn branch_delay(&self) -> usize {
        self.frame_length / 2
    }

    /// Signed baseband bins carrying the sequence spectrum, ascending.
    pub fn occupied_bins(&self) -> Vec<i64> {
        let half = (self.sequence_length() / 2) as i64;
        (-half..=half).collect()
    }

    /// Absolute frequency of every occupied subcarrier, ascending.
    pub fn subcarrier_frequencies(&self) -> Vec<f64> {
        let df = self.bin_spacing();
        self.occupied_bins().into_iter().map(|k| self.carrier_frequency + k as f64 * df).collect()
    }

    /// CSI rate of one branch, `f_s / N_s`.
    pub fn branch_csi_rate(&self) -> f64 {
        self.sample_rate() / self.frame_length as f64
    }

    /// CSI rate after interleaving both branches.
    pub fn otdm_csi_rate(&self) -> f64 {
        2.0 * self.branch_csi_rate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.audio_sample_rate == 0 {
            return invalid("audio sample rate must be positive");
        }
        if !self.frame_length.is_power_of_two() || self.frame_length < 4 {
            return invalid(format!("frame length must be a power of two, got {}", self.frame_length));
        }
        if !self.sequence_degree.is_multiple_of(2) || self.sequence_degree < 4 {
            return invalid(format!(
                "sequence degree must be even and at least 4, got {}",
                self.sequence_degree
            ));
        }
        if self.sequence_degree > 16 || self.sequence_length() >= self.frame_length {
            return invalid(format!(
                "sequence of {} chips does not fit a {}-sample frame",
                self.sequence_length(),
                self.frame_length
            ));
        }
        let set = 1u32 << (self.sequence_degree / 2);
        let [a, b] = self.sequence_indices;
        if a == b || a >= set || b >= set {
            return invalid(format!(
                "sequence indices {a} and {b} must be distinct members of a {set}-member set"
            ));
        }
        let half_bw = self.occupied_bandwidth() / 2.0;
        if !(self.carrier_frequency - half_bw > 0.0) {
            return invalid("carrier too low for the occupied bandwidth");
        }
        if self.carrier_frequency + half_bw > self.sample_rate() / 2.0 {
            return invalid(format!(
                "band {:.1} Hz +/- {:.1} Hz exceeds Nyquist {:.1} Hz",
                self.carrier_frequency,
                half_bw,
                self.sample_rate() / 2.0
            ));
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return invalid("amplitude must be finite and non-negative");
        }
        if !(self.lpf_cutoff > half_bw) || self.lpf_cutoff >= self.sample_rate() / 2.0 {
            return invalid(format!(
                "low-pass cutoff {} Hz must exceed half the occupied bandwidth ({half_bw:.1} Hz)",
                self.lpf_cutoff
            ));
        }
        if self.lpf_taps.is_multiple_of(2) {
            return invalid("low-pass length must be odd");
        }
        if !(2..=32).contains(&self.pcm_bits) {
            return invalid(format!("unsupported PCM width {}", self.pcm_bits));
        }
        if !(self.sound_speed > 0.0) {
            return invalid("sound speed must be positive");
        }
        Ok(())
    }
}
