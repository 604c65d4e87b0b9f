//! Prominence-weighted combining of aligned ACF rows.

use super::acf::AcfMatrix;
use super::align::pool_rows;
use super::config::EstimatorConfig;
use super::peak::{first_peak, FirstPeak};
use crate::error::{Error, Result};

/// Weighted average of the aligned rows and how it was formed.
#[derive(Debug, Clone, PartialEq)]
pub struct Combined {
    pub row: Vec<f64>,
    /// One weight per subcarrier; zero for rows without a usable peak.
    pub weights: Vec<f64>,
    /// First peak of every valid row, in aligned grid units.
    pub peaks: Vec<Option<FirstPeak>>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Logistic `1 / (1 + exp(-a (tau - b)))` through weight `at_b` at `b` and
/// `at_inner` at `inner`; `a` takes the sign that makes the curve rise
/// towards `inner`.
pub fn sigmoid_through(tau: f64, b: f64, inner: f64, at_b: f64, at_inner: f64) -> f64 {
    let logit = |w: f64| (w / (1.0 - w)).ln();
    let span = inner - b;
    if span.abs() < 1e-12 {
        return if (tau - b).abs() < 1e-12 { at_b } else { 1.0 };
    }
    // two-point fit: a (inner - b0) = logit(at_inner), a (b - b0) = logit(at_b)
    let a = (logit(at_inner) - logit(at_b)) / span;
    let b0 = b - logit(at_b) / a;
    1.0 / (1.0 + (-a * (tau - b0)).exp())
}

/// Decay factor for a first peak at `tau` given the spread of all peaks.
pub fn decay_weight(tau: f64, lags: &[f64], cfg: &EstimatorConfig) -> f64 {
    let mut sorted = lags.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let median = quantile(&sorted, 0.5);
    let (q1, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
    let (lo, hi) = (mean.min(median), mean.max(median));
    if tau < q1 || tau > q3 {
        return 0.0;
    }
    let (qw, iw) = (cfg.sigmoid_quartile_weight, cfg.sigmoid_inner_weight);
    if tau < lo {
        sigmoid_through(tau, q1, lo, qw, iw)
    } else if tau > hi {
        sigmoid_through(tau, q3, hi, qw, iw)
    } else {
        1.0
    }
}

/// Weights every valid aligned row by the prominence of its first peak,
/// decayed by how far that peak sits from the bulk of the others, and
/// returns the normalized weighted sum.
pub fn combine_weighted(aligned: &AcfMatrix, cfg: &EstimatorConfig) -> Result<Combined> {
    let n = aligned.n_rows();
    let peaks: Vec<Option<FirstPeak>> = (0..n)
        .map(|k| {
            if !aligned.valid[k] {
                return None;
            }
            let row = aligned.row(k).to_vec();
            first_peak(&row, cfg.smoothing, cfg.min_prominence)
        })
        .collect();
    let lags: Vec<f64> = peaks.iter().flatten().map(|p| p.position).collect();
    if lags.is_empty() {
        return Err(Error::NoPeak("no subcarrier shows a first peak".into()));
    }
    let mut weights: Vec<f64> = peaks
        .iter()
        .map(|p| p.map_or(0.0, |p| p.prominence * decay_weight(p.position, &lags, cfg)))
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NoPeak("all first peaks carry zero weight".into()));
    }
    for w in &mut weights {
        *w /= total;
    }
    let mut row = vec![0.0; aligned.n_lags()];
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            for (r, v) in row.iter_mut().zip(aligned.row(k)) {
                *r += w * v;
            }
        }
    }
    for r in &mut row {
        *r = r.clamp(-1.0, 1.0);
    }
    Ok(Combined { row, weights, peaks })
}

/// Weights as in [`combine_weighted`], but the combined row pools the raw
/// integer-lag samples of `raw` onto the aligned grid instead of averaging
/// interpolated rows. `aligned` must come from `raw`.
pub fn combine_pooled(raw: &AcfMatrix, aligned: &AcfMatrix, cfg: &EstimatorConfig) -> Result<Combined> {
    let mut combined = combine_weighted(aligned, cfg)?;
    let f_ref = aligned
        .reference_frequency
        .ok_or_else(|| Error::InvalidParameter("second matrix is not aligned".into()))?;
    let over = (raw.lag_step / aligned.lag_step).round() as usize;
    let mut row = pool_rows(raw, f_ref, over, Some(&combined.weights))?;
    row.truncate(aligned.n_lags());
    for r in &mut row {
        *r = r.clamp(-1.0, 1.0);
    }
    combined.row = row;
    Ok(combined)
}
