//! Doppler-shift baseline: dominant spectral line of the dynamic CSI.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::acf::{channel_power, Window};
use super::config::EstimatorConfig;
use super::peak::parabolic;
use super::window_starts;
use crate::csi::CsiSeries;
use crate::dsp::{fft_unitary, signed_bin};
use crate::error::Result;
use crate::modem::max_measurable_speed_with;

/// Radial speed from the Doppler line of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfsEstimate {
    pub time: f64,
    /// Median over subcarriers, positive for shortening paths; subcarriers
    /// without a clear line vote zero.
    pub radial_speed: f64,
    /// Share of subcarriers with a clear Doppler line.
    pub voting_fraction: f64,
    /// Per-subcarrier speeds disagree or exceed the unambiguous range.
    pub aliased: bool,
}

/// Welch power spectrum (Hann segments) in FFT order.
fn welch(x: &[Complex64], seg: usize, hop: usize, nfft: usize) -> Vec<f64> {
    let window: Vec<f64> =
        (0..seg).map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / seg as f64).cos()).collect();
    let mut psd = vec![0.0; nfft];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    let mut count = 0;
    let mut start = 0;
    while start + seg <= x.len() {
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for i in 0..seg {
            buf[i] = x[start + i] * window[i];
        }
        fft_unitary(&mut buf);
        for (p, b) in psd.iter_mut().zip(&buf) {
            *p += b.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    if count > 0 {
        psd.iter_mut().for_each(|p| *p /= count as f64);
    }
    psd
}

/// Dominant Doppler frequency (Hz) of one subcarrier, or `None` when no
/// single line holds at least `min_concentration` of the power within
/// `cell` bins of the peak.
fn doppler_line(psd: &[f64], rate: f64, cell: usize, min_concentration: f64) -> Option<f64> {
    let n = psd.len();
    let total: f64 = psd.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let (peak, _) =
        psd.iter()
            .enumerate()
            .skip(1)
            .fold((1, f64::NEG_INFINITY), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    let near: f64 = (0..=2 * cell).map(|d| psd[(peak + n + d - cell) % n]).sum();
    if near / total < min_concentration {
        return None;
    }
    let tri = [psd[(peak + n - 1) % n], psd[peak], psd[(peak + 1) % n]];
    let offset = parabolic(&tri, 1) - 1.0;
    Some((signed_bin(peak, n) as f64 + offset) * rate / n as f64)
}

/// DFS estimate of the window starting at frame `start`.
pub fn dfs_window(csi: &CsiSeries, start: usize, cfg: &EstimatorConfig) -> Result<DfsEstimate> {
    let rate = csi.csi_rate();
    let len = cfg.window_frames(rate);
    let power = channel_power(csi, Window { start, len })?;
    let d = &cfg.dfs;
    let seg = ((d.segment * rate).round() as usize).clamp(4, len);
    let hop = ((seg as f64 * (1.0 - d.overlap)).round() as usize).max(1);
    let nfft = (seg * d.zero_pad).next_power_of_two();
    // main lobe of a Hann window spans two resolution bins each side
    let cell = 2 * nfft / seg;
    let freqs = csi.subcarrier_frequencies();
    let mut speeds = Vec::with_capacity(freqs.len());
    let mut column = vec![Complex64::new(0.0, 0.0); len];
    for (k, &f) in freqs.iter().enumerate() {
        for (c, v) in column.iter_mut().zip(power.dynamic.column(k)) {
            *c = *v;
        }
        let psd = welch(&column, seg, hop, nfft);
        let v = doppler_line(&psd, rate, cell, d.min_concentration)
            .map(|g| g * cfg.sound_speed / (d.path_length_factor * f));
        speeds.push(v);
    }
    let voters: Vec<f64> = speeds.iter().flatten().copied().collect();
    let mut all: Vec<f64> = speeds.iter().map(|v| v.unwrap_or(0.0)).collect();
    all.sort_by(f64::total_cmp);
    let radial_speed = super::quantile(&all, 0.5);
    let voting_fraction = voters.len() as f64 / freqs.len().max(1) as f64;
    let f_max = freqs.iter().copied().fold(0.0, f64::max);
    let limit = max_measurable_speed_with(rate, f_max, cfg.sound_speed) / d.path_length_factor;
    let aliased = if voters.len() >= 2 {
        let mut v = voters.clone();
        v.sort_by(f64::total_cmp);
        let median = super::quantile(&v, 0.5);
        let spread = super::quantile(&v, 0.9) - super::quantile(&v, 0.1);
        spread > d.alias_spread * median.abs().max(1e-9) || median.abs() > limit
    } else {
        false
    };
    Ok(DfsEstimate {
        time: csi.timestamps()[start] + 0.5 * len as f64 / rate,
        radial_speed,
        voting_fraction,
        aliased,
    })
}

/// Doppler baseline over the same windows as the ACF estimator.
pub fn dfs_baseline(csi: &CsiSeries, cfg: &EstimatorConfig) -> Result<Vec<DfsEstimate>> {
    cfg.validate()?;
    window_starts(csi.n_frames(), csi.csi_rate(), cfg)
        .into_par_iter()
        .map(|start| dfs_window(csi, start, cfg))
        .collect()
}
