//! Dynamic channel component and its normalized autocorrelation.

use ndarray::{s, Array2, ArrayView1};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csi::CsiSeries;
use crate::error::{invalid, Result};

/// Frame range of one analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

/// Channel with the per-subcarrier time mean removed over one window.
#[derive(Debug, Clone)]
pub struct ChannelPower {
    /// Mean-removed CSI, time × subcarrier.
    pub dynamic: Array2<Complex64>,
    /// Energy of the raw CSI per subcarrier, for the zero-variance test.
    raw_energy: Vec<f64>,
    pub window_start: f64,
    pub csi_rate: f64,
    pub subcarrier_frequencies: Vec<f64>,
}

impl ChannelPower {
    /// `G(f, t) = |H(f, t) - mean_t H(f, .)|^2`, time × subcarrier.
    pub fn power(&self) -> Array2<f64> {
        self.dynamic.mapv(|c| c.norm_sqr())
    }

    pub fn n_frames(&self) -> usize {
        self.dynamic.nrows()
    }
}

/// Removes the static paths (time mean over the window) from the CSI.
pub fn channel_power(csi: &CsiSeries, window: Window) -> Result<ChannelPower> {
    if window.len < 2 {
        return invalid(format!("window of {} frames is too short", window.len));
    }
    if window.start + window.len > csi.n_frames() {
        return invalid(format!(
            "window {}..{} exceeds the {} available frames",
            window.start,
            window.start + window.len,
            csi.n_frames()
        ));
    }
    let h = csi.frames();
    let h = h.slice(s![window.start..window.start + window.len, ..]);
    let nf = h.ncols();
    let mut dynamic = h.to_owned();
    let mut raw_energy = Vec::with_capacity(nf);
    for mut col in dynamic.columns_mut() {
        let mean = col.iter().sum::<Complex64>() / window.len as f64;
        raw_energy.push(col.iter().map(|c| c.norm_sqr()).sum());
        col.mapv_inplace(|c| c - mean);
    }
    Ok(ChannelPower {
        dynamic,
        raw_energy,
        window_start: csi.timestamps()[window.start],
        csi_rate: csi.csi_rate(),
        subcarrier_frequencies: csi.subcarrier_frequencies().to_vec(),
    })
}

/// Normalized autocorrelation, subcarrier × lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfMatrix {
    pub values: Array2<f64>,
    /// Rows with zero dynamic variance are invalid; masked outliers too.
    pub valid: Vec<bool>,
    /// Seconds per column.
    pub lag_step: f64,
    pub window_start: f64,
    pub subcarrier_frequencies: Vec<f64>,
    /// Frames that went into each row.
    pub window_frames: usize,
    /// Set once the rows have been rescaled to a common reference frequency.
    pub reference_frequency: Option<f64>,
}

impl AcfMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_lags(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, f64> {
        self.values.row(k)
    }

    pub fn valid_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.valid.iter().enumerate().filter(|(_, &v)| v).map(|(k, _)| k)
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Lag of column `j` in seconds.
    pub fn lag(&self, j: usize) -> f64 {
        j as f64 * self.lag_step
    }

    /// Unweighted mean of the valid rows.
    pub fn mean_row(&self) -> Option<Vec<f64>> {
        let n = self.n_valid();
        if n == 0 {
            return None;
        }
        let mut mean = vec![0.0; self.n_lags()];
        for k in self.valid_rows() {
            for (m, v) in mean.iter_mut().zip(self.values.row(k)) {
                *m += v / n as f64;
            }
        }
        Some(mean)
    }
}

/// Autocorrelation of the dynamic channel for lags `0..=max_lag` frames:
///
/// `psi(tau) = Re sum_t D(t) D*(t + tau) / sum_t |D(t)|^2`
///
/// The sum runs over the overlap and is divided by the full window energy
/// (biased estimator), so every value lies in [-1, 1] and lag 0 is exactly 1.
/// For a diffuse field this is the spatial correlation of pressure sampled
/// along the target's path; its lag-0 denominator is the channel power.
pub fn compute_acf(power: &ChannelPower, max_lag: usize) -> Result<AcfMatrix> {
    let n = power.n_frames();
    if n < 2 * max_lag {
        return invalid(format!("window of {n} frames is shorter than twice the {max_lag}-frame max lag"));
    }
    let nf = power.dynamic.ncols();
    let mut values = Array2::zeros((nf, max_lag + 1));
    let mut valid = vec![false; nf];
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..nf {
        for (c, v) in column.iter_mut().zip(power.dynamic.column(k)) {
            *c = *v;
        }
        let energy: f64 = column.iter().map(|c| c.norm_sqr()).sum();
        // rounding residue of a constant channel is not motion
        if !(energy > 1e-20 * power.raw_energy[k]) || energy == 0.0 {
            continue;
        }
        valid[k] = true;
        values[[k, 0]] = 1.0;
        for lag in 1..=max_lag {
            let mut acc = 0.0;
            for t in 0..n - lag {
                let (a, b) = (column[t], column[t + lag]);
                acc += a.re * b.re + a.im * b.im;
            }
            values[[k, lag]] = (acc / energy).clamp(-1.0, 1.0);
        }
    }
    Ok(AcfMatrix {
        values,
        valid,
        lag_step: 1.0 / power.csi_rate,
        window_start: power.window_start,
        subcarrier_frequencies: power.subcarrier_frequencies.clone(),
        window_frames: n,
        reference_frequency: None,
    })
}
