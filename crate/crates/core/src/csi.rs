//! Channel frequency response over time.

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Complex channel response, time × subcarrier, sampled at `csi_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiSeries {
    frames: Array2<Complex64>,
    csi_rate: f64,
    subcarrier_frequencies: Vec<f64>,
    timestamps: Vec<f64>,
}

impl CsiSeries {
    /// Builds a series whose rows are `1 / csi_rate` apart starting at
    /// `start_time`.
    pub fn uniform(
        frames: Array2<Complex64>,
        csi_rate: f64,
        subcarrier_frequencies: Vec<f64>,
        start_time: f64,
    ) -> Result<Self> {
        let timestamps = (0..frames.nrows()).map(|i| start_time + i as f64 / csi_rate).collect();
        Self::new(frames, csi_rate, subcarrier_frequencies, timestamps)
    }

    pub fn new(
        frames: Array2<Complex64>,
        csi_rate: f64,
        subcarrier_frequencies: Vec<f64>,
        timestamps: Vec<f64>,
    ) -> Result<Self> {
        if !(csi_rate > 0.0) || !csi_rate.is_finite() {
            return invalid(format!("CSI rate must be positive, got {csi_rate}"));
        }
        if frames.ncols() != subcarrier_frequencies.len() {
            return invalid(format!(
                "{} subcarrier columns but {} frequencies",
                frames.ncols(),
                subcarrier_frequencies.len()
            ));
        }
        if frames.nrows() != timestamps.len() {
            return invalid(format!("{} frames but {} timestamps", frames.nrows(), timestamps.len()));
        }
        Ok(Self { frames, csi_rate, subcarrier_frequencies, timestamps })
    }

    pub fn frames(&self) -> ArrayView2<'_, Complex64> {
        self.frames.view()
    }

    pub fn into_frames(self) -> Array2<Complex64> {
        self.frames
    }

    pub fn csi_rate(&self) -> f64 {
        self.csi_rate
    }

    pub fn subcarrier_frequencies(&self) -> &[f64] {
        &self.subcarrier_frequencies
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.frames.ncols()
    }

    pub fn start_time(&self) -> f64 {
        self.timestamps.first().copied().unwrap_or(0.0)
    }

    /// Covered time span, `n_frames / csi_rate`.
    pub fn duration(&self) -> f64 {
        self.n_frames() as f64 / self.csi_rate
    }

    /// Rows `start..end` as a new series.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            frames: self.frames.slice(s![start..end, ..]).to_owned(),
            csi_rate: self.csi_rate,
            subcarrier_frequencies: self.subcarrier_frequencies.clone(),
            timestamps: self.timestamps[start..end].to_vec(),
        }
    }

    /// Keeps every `factor`-th row, dividing the rate accordingly.
    pub fn decimate(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let rows: Vec<usize> = (0..self.n_frames()).step_by(factor).collect();
        let frames = self.frames.select(ndarray::Axis(0), &rows);
        Self {
            frames,
            csi_rate: self.csi_rate / factor as f64,
            subcarrier_frequencies: self.subcarrier_frequencies.clone(),
            timestamps: rows.iter().map(|&r| self.timestamps[r]).collect(),
        }
    }

    /// Applies `f` to every sample; the grid and timing are unchanged.
    pub fn map(&self, mut f: impl FnMut(usize, usize, Complex64) -> Complex64) -> Self {
        let mut frames = self.frames.clone();
        for ((t, k), v) in frames.indexed_iter_mut() {
            *v = f(t, k, *v);
        }
        Self { frames, ..self.clone() }
    }
}
