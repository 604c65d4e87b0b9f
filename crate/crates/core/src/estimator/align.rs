//! Lag rescaling of ACF rows to a common reference frequency.

use ndarray::Array2;

use super::acf::AcfMatrix;
use crate::error::{invalid, Result};

/// Value of an even, lag-sampled curve at fractional lag `pos` by
/// Catmull-Rom interpolation. Negative lags mirror onto positive ones;
/// lags past the end hold the last sample.
pub fn interpolate_even(row: &[f64], pos: f64) -> f64 {
    let n = row.len() as i64;
    let at = |i: i64| -> f64 { row[i.abs().min(n - 1) as usize] };
    let pos = pos.abs();
    let i = pos.floor() as i64;
    let t = pos - i as f64;
    if t == 0.0 {
        return at(i);
    }
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
}

/// Samples `row` (unit lag spacing) at `out_len` points spaced `step` lags
/// apart: `out[j] = row(j * step)`.
pub fn rescale_row(row: &[f64], step: f64, out_len: usize) -> Vec<f64> {
    (0..out_len).map(|j| interpolate_even(row, j as f64 * step)).collect()
}

/// Rescales every row in lag so that the row at frequency `f` is expressed
/// at `f_ref`: the aligned value at lag `tau'` is the original at
/// `tau' * f_ref / f`. Equal speeds then put their first peaks at the same
/// aligned lag on every subcarrier.
///
/// The output grid has `oversample` points per original lag and stops at the
/// largest lag every row can supply.
pub fn align_frequency(acf: &AcfMatrix, f_ref: f64, oversample: usize) -> Result<AcfMatrix> {
    if !(f_ref > 0.0) || !f_ref.is_finite() {
        return invalid(format!("reference frequency must be positive, got {f_ref}"));
    }
    if oversample == 0 {
        return invalid("oversampling factor must be at least 1");
    }
    if acf.reference_frequency.is_some() {
        return invalid("ACF rows are already aligned");
    }
    let cols = aligned_len(acf, f_ref, oversample);
    let mut values = Array2::zeros((acf.n_rows(), cols));
    for (k, &f) in acf.subcarrier_frequencies.iter().enumerate() {
        let row = acf.row(k).to_vec();
        let step = f_ref / (f * oversample as f64);
        for (j, v) in rescale_row(&row, step, cols).into_iter().enumerate() {
            values[[k, j]] = v;
        }
    }
    Ok(AcfMatrix {
        values,
        valid: acf.valid.clone(),
        lag_step: acf.lag_step / oversample as f64,
        window_start: acf.window_start,
        subcarrier_frequencies: acf.subcarrier_frequencies.clone(),
        window_frames: acf.window_frames,
        reference_frequency: Some(f_ref),
    })
}

/// Length of the aligned grid for `acf`: the largest lag every row can
/// supply, at `oversample` points per original lag.
pub fn aligned_len(acf: &AcfMatrix, f_ref: f64, oversample: usize) -> usize {
    let max_lag = (acf.n_lags() - 1) as f64;
    let f_min = acf.subcarrier_frequencies.iter().copied().fold(f64::INFINITY, f64::min);
    // the lowest subcarrier stretches the most
    let reach = max_lag * f_min / f_ref;
    (reach * oversample as f64 + 1e-9).floor() as usize + 1
}

/// Weighted average of the raw integer-lag samples of every valid row,
/// binned on the aligned grid.
///
/// Lag `l` of the row at `f` lands at aligned lag `l * f / f_ref`, so the
/// subcarriers together sample the aligned axis far more densely than any
/// single row. Pooling keeps that diversity where per-row interpolation
/// would smear rows that are undersampled in lag. Empty bins are filled
/// linearly from their neighbours. `weights` of `None` weighs rows equally.
pub fn pool_rows(
    acf: &AcfMatrix,
    f_ref: f64,
    oversample: usize,
    weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    pool_rows_counted(acf, f_ref, oversample, weights).map(|(row, _)| row)
}

/// [`pool_rows`] together with the number of raw samples in each bin
/// (zero where the value was filled in).
pub fn pool_rows_counted(
    acf: &AcfMatrix,
    f_ref: f64,
    oversample: usize,
    weights: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if !(f_ref > 0.0) || !f_ref.is_finite() || oversample == 0 {
        return invalid("pooling needs a positive reference frequency and oversampling");
    }
    if acf.reference_frequency.is_some() {
        return invalid("pooling works on integer-lag rows");
    }
    let cols = aligned_len(acf, f_ref, oversample);
    let mut sum = vec![0.0; cols];
    let mut mass = vec![0.0; cols];
    let mut count = vec![0usize; cols];
    for k in acf.valid_rows() {
        let w = weights.map_or(1.0, |w| w[k]);
        if w <= 0.0 {
            continue;
        }
        let scale = acf.subcarrier_frequencies[k] / f_ref * oversample as f64;
        for (l, &v) in acf.row(k).iter().enumerate() {
            let j = (l as f64 * scale).round() as usize;
            if j < cols {
                sum[j] += w * v;
                mass[j] += w;
                count[j] += 1;
            }
        }
    }
    let filled: Vec<usize> = (0..cols).filter(|&j| mass[j] > 0.0).collect();
    if filled.is_empty() {
        return invalid("no row carries weight");
    }
    let mut row: Vec<f64> = (0..cols).map(|j| if mass[j] > 0.0 { sum[j] / mass[j] } else { 0.0 }).collect();
    for pair in filled.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for j in a + 1..b {
            let t = (j - a) as f64 / (b - a) as f64;
            row[j] = row[a] + t * (row[b] - row[a]);
        }
    }
    let last = *filled.last().unwrap();
    for j in last + 1..cols {
        row[j] = row[last];
    }
    Ok((row, count))
}
