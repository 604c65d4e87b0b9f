use serde::{Deserialize, Serialize};

use crate::diffusion::ModelKind;
use crate::error::{invalid, Result};
use crate::SOUND_SPEED;

/// Parameters of the sliding-window speed estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Analysis window in seconds.
    pub window: f64,
    /// Hop between windows in seconds.
    pub step: f64,
    /// Largest ACF lag in seconds.
    pub max_lag: f64,
    /// Motion is declared when the zero-crossing count exceeds this.
    pub zcc_threshold: f64,
    /// Lower bound of the hysteresis band for counting zero crossings.
    pub zcc_floor: f64,
    /// Minimum prominence of a first peak.
    pub min_prominence: f64,
    /// Moving-average length applied before peak picking (odd).
    pub smoothing: usize,
    /// Reference frequency for lag alignment; the centre of the subcarrier
    /// grid when unset.
    pub f_ref: Option<f64>,
    /// Aligned lag grid points per CSI frame.
    pub oversample: usize,
    /// Sigmoid weight at the quartile boundary.
    pub sigmoid_quartile_weight: f64,
    /// Sigmoid weight at the mean/median edge.
    pub sigmoid_inner_weight: f64,
    /// Rows whose linear fit reaches this R^2 are treated as trends.
    pub trend_r2: f64,
    /// ... provided the fitted line changes by at least this much.
    pub trend_span: f64,
    /// Rows alternating sign lag-to-lag more often than this are zig-zags.
    pub zigzag_fraction: f64,
    /// ... unless their magnitude decays (second-half to first-half ratio
    /// below this).
    pub zigzag_decay: f64,
    /// Fit the correlation model to the pooled per-subcarrier samples around
    /// the combined first peak.
    pub refine: bool,
    pub model: ModelKind,
    pub sound_speed: f64,
    pub dfs: DfsConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            window: 1.0,
            step: 0.1,
            max_lag: 0.5,
            zcc_threshold: 0.5,
            zcc_floor: 0.02,
            min_prominence: 0.05,
            smoothing: 3,
            f_ref: None,
            oversample: 4,
            sigmoid_quartile_weight: 0.5,
            sigmoid_inner_weight: 0.99,
            trend_r2: 0.9,
            trend_span: 0.5,
            zigzag_fraction: 0.9,
            zigzag_decay: 0.5,
            refine: true,
            model: ModelKind::default(),
            sound_speed: SOUND_SPEED,
            dfs: DfsConfig::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0) || !(self.step > 0.0) || self.step > self.window {
            return invalid(format!(
                "need 0 < step <= window, got step {} and window {}",
                self.step, self.window
            ));
        }
        if !(self.max_lag > 0.0) || self.max_lag >= self.window {
            return invalid(format!(
                "max lag {} must be positive and shorter than the window {}",
                self.max_lag, self.window
            ));
        }
        if self.smoothing.is_multiple_of(2) {
            return invalid("smoothing length must be odd");
        }
        if self.oversample == 0 {
            return invalid("oversampling factor must be at least 1");
        }
        if let Some(f) = self.f_ref {
            if !(f > 0.0) {
                return invalid(format!("reference frequency must be positive, got {f}"));
            }
        }
        let (q, i) = (self.sigmoid_quartile_weight, self.sigmoid_inner_weight);
        if !(0.0 < q && q < i && i < 1.0) {
            return invalid("sigmoid weights must satisfy 0 < quartile < inner < 1");
        }
        if !(self.min_prominence >= 0.0) || !(self.zcc_floor >= 0.0) {
            return invalid("prominence and zero-crossing floors must be non-negative");
        }
        if !(self.sound_speed > 0.0) {
            return invalid("sound speed must be positive");
        }
        self.dfs.validate()
    }

    /// Window length in frames at `rate`.
    pub fn window_frames(&self, rate: f64) -> usize {
        (self.window * rate).round() as usize
    }

    /// Largest ACF lag in frames at `rate`.
    pub fn max_lag_frames(&self, rate: f64) -> usize {
        (self.max_lag * rate).round() as usize
    }

    /// Reference frequency for a subcarrier grid.
    pub fn reference_frequency(&self, subcarriers: &[f64]) -> f64 {
        self.f_ref.unwrap_or_else(|| {
            let lo = subcarriers.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = subcarriers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            0.5 * (lo + hi)
        })
    }
}

/// Parameters of the Doppler-shift baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DfsConfig {
    /// Welch segment length in seconds.
    pub segment: f64,
    /// Fractional overlap of consecutive segments.
    pub overlap: f64,
    /// FFT length as a multiple of the segment (next power of two).
    pub zero_pad: usize,
    /// Share of spectral power within a resolution cell of the peak
    /// required before a subcarrier votes.
    pub min_concentration: f64,
    /// Path-length change per metre of target motion. 1 for a path that
    /// lengthens at the target speed, 2 for a monostatic round trip.
    pub path_length_factor: f64,
    /// Relative spread of per-subcarrier speeds above which the estimate is
    /// flagged as aliased.
    pub alias_spread: f64,
}

impl Default for DfsConfig {
    fn default() -> Self {
        Self {
            segment: 0.25,
            overlap: 0.5,
            zero_pad: 4,
            min_concentration: 0.5,
            path_length_factor: 1.0,
            alias_spread: 0.1,
        }
    }
}

impl DfsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.segment > 0.0) || !(0.0..1.0).contains(&self.overlap) || self.zero_pad == 0 {
            return invalid("DFS segment must be positive with overlap in [0, 1)");
        }
        if !(self.path_length_factor > 0.0) {
            return invalid("path length factor must be positive");
        }
        Ok(())
    }
}
