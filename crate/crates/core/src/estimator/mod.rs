//! Speed estimation from a CSI series: dynamic channel power, ACF,
//! motion detection, outlier rejection, frequency alignment, weighted
//! combining and first-peak solving; plus a Doppler-shift baseline.

mod acf;
mod align;
mod combine;
mod config;
mod dfs;
mod motion;
mod outlier;
mod peak;
mod refine;

pub use acf::{channel_power, compute_acf, AcfMatrix, ChannelPower, Window};
pub use align::{align_frequency, aligned_len, interpolate_even, pool_rows, pool_rows_counted, rescale_row};
pub use combine::{combine_pooled, combine_weighted, decay_weight, quantile, sigmoid_through, Combined};
pub use config::{DfsConfig, EstimatorConfig};
pub use dfs::{dfs_baseline, dfs_window, DfsEstimate};
pub use motion::{motion_detect, motion_zcc, zcc_banded, zcc_floor, zcc_motion};
pub use outlier::{filter_outlier_acf, is_outlier, linear_trend, zigzag};
pub use peak::{first_peak, parabolic, prominence, smooth, FirstPeak};
pub use refine::fit_peak_lag;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csi::CsiSeries;
use crate::diffusion::{speed_from_peak, DiffusionModel, ModelKind};
use crate::error::Result;

/// Outcome of one analysis window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    /// Window centre in seconds.
    pub time: f64,
    /// Speed in m/s; present only with motion and a usable first peak.
    pub speed: Option<f64>,
    pub motion: bool,
    /// First-peak lag in seconds at the reference frequency.
    pub tau_s: Option<f64>,
    /// Prominence of the combined first peak.
    pub confidence: f64,
    pub model_kind: ModelKind,
    /// Zero-crossing count behind the motion decision.
    pub zcc: usize,
}

/// Start frames of every analysis window over `n_frames` at `rate`:
/// `floor((duration - window) / step) + 1` windows, or none if the series
/// is shorter than one window.
pub fn window_starts(n_frames: usize, rate: f64, cfg: &EstimatorConfig) -> Vec<usize> {
    let len = cfg.window_frames(rate);
    let duration = n_frames as f64 / rate;
    if len == 0 || len > n_frames || duration + 1e-9 < cfg.window {
        return Vec::new();
    }
    let count = ((duration - cfg.window) / cfg.step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| ((k as f64 * cfg.step * rate).round() as usize).min(n_frames - len)).collect()
}

/// Per-window intermediate products, for inspection and plotting.
#[derive(Debug, Clone)]
pub struct WindowAnalysis {
    pub estimate: SpeedEstimate,
    /// Outlier-filtered ACF on integer lags.
    pub acf: AcfMatrix,
    /// Frequency-aligned ACF.
    pub aligned: Option<AcfMatrix>,
    pub combined: Option<Combined>,
}

/// Runs the full chain on the window starting at frame `start`.
pub fn analyze_window(
    csi: &CsiSeries,
    start: usize,
    cfg: &EstimatorConfig,
    model: &DiffusionModel,
) -> Result<WindowAnalysis> {
    let rate = csi.csi_rate();
    let len = cfg.window_frames(rate);
    let max_lag = cfg.max_lag_frames(rate);
    let time = csi.timestamps()[start] + 0.5 * len as f64 / rate;
    let power = channel_power(csi, Window { start, len })?;
    let acf = filter_outlier_acf(&compute_acf(&power, max_lag)?, cfg);
    let f_ref = cfg.reference_frequency(csi.subcarrier_frequencies());
    let mut estimate = SpeedEstimate {
        time,
        speed: None,
        motion: false,
        tau_s: None,
        confidence: 0.0,
        model_kind: model.kind,
        zcc: 0,
    };
    if acf.n_valid() == 0 {
        return Ok(WindowAnalysis { estimate, acf, aligned: None, combined: None });
    }
    let aligned = align_frequency(&acf, f_ref, cfg.oversample)?;
    estimate.zcc = motion_zcc(&acf, cfg).unwrap_or(0);
    estimate.motion = estimate.zcc as f64 > cfg.zcc_threshold;
    if !estimate.motion {
        return Ok(WindowAnalysis { estimate, acf, aligned: Some(aligned), combined: None });
    }
    let combined = match combine_pooled(&acf, &aligned, cfg) {
        Ok(c) => c,
        Err(_) => return Ok(WindowAnalysis { estimate, acf, aligned: Some(aligned), combined: None }),
    };
    if let Some(peak) = first_peak(&combined.row, cfg.smoothing, cfg.min_prominence) {
        let over = cfg.oversample as f64;
        let mut lag = peak.position / over;
        if cfg.refine {
            let x0 = model.reference_point;
            if let Some(t) =
                fit_peak_lag(&acf, &combined.weights, f_ref, model.kind, x0, 0.8 * lag, 1.25 * lag, 2.0 * lag)
            {
                lag = t;
            }
        }
        let tau_s = lag / rate;
        if let Ok(v) = speed_from_peak(model, tau_s, f_ref) {
            estimate.speed = Some(v);
            estimate.tau_s = Some(tau_s);
            estimate.confidence = peak.prominence;
        }
    }
    Ok(WindowAnalysis { estimate, acf, aligned: Some(aligned), combined: Some(combined) })
}

/// Slides the analysis window over `csi` and emits one estimate per
/// position, in time order.
pub fn estimate_speed(csi: &CsiSeries, cfg: &EstimatorConfig) -> Result<Vec<SpeedEstimate>> {
    cfg.validate()?;
    let model = DiffusionModel::with_sound_speed(cfg.model, cfg.sound_speed);
    window_starts(csi.n_frames(), csi.csi_rate(), cfg)
        .into_par_iter()
        .map(|start| analyze_window(csi, start, cfg, &model).map(|a| a.estimate))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_count_formula() {
        let cfg = EstimatorConfig::default();
        // 10 s at 187.5 Hz
        let starts = window_starts(1875, 187.5, &cfg);
        assert_eq!(starts.len(), 91);
        assert_eq!(starts[1], 19);
        assert!(starts.iter().all(|&s| s + 188 <= 1875));
        assert!(window_starts(100, 187.5, &cfg).is_empty());
        assert_eq!(window_starts(188, 187.5, &cfg).len(), 1);
    }
}
