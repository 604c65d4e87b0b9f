//! Rejection of trend-like and zig-zag ACF rows.

use super::acf::AcfMatrix;
use super::config::EstimatorConfig;

/// Coefficient of determination and total change of a least-squares line
/// through `row[1..]`.
pub fn linear_trend(row: &[f64]) -> (f64, f64) {
    let y = &row[1.min(row.len())..];
    let n = y.len() as f64;
    if y.len() < 3 {
        return (0.0, 0.0);
    }
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - mx;
        let dy = v - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if syy == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    (sxy * sxy / (sxx * syy), slope * (n - 1.0))
}

/// Share of consecutive lag-to-lag steps that reverse direction, and the
/// ratio of mean magnitude in the second half of `row[1..]` to the first.
pub fn zigzag(row: &[f64]) -> (f64, f64) {
    let y = &row[1.min(row.len())..];
    if y.len() < 4 {
        return (0.0, 0.0);
    }
    let d: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let flips = d.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    let fraction = flips as f64 / (d.len() - 1) as f64;
    let half = y.len() / 2;
    let mean_abs = |s: &[f64]| s.iter().map(|v| v.abs()).sum::<f64>() / s.len() as f64;
    let first = mean_abs(&y[..half]);
    let ratio = if first > 0.0 { mean_abs(&y[half..]) / first } else { 0.0 };
    (fraction, ratio)
}

pub fn is_outlier(row: &[f64], cfg: &EstimatorConfig) -> bool {
    let (r2, change) = linear_trend(row);
    if r2 >= cfg.trend_r2 && change.abs() >= cfg.trend_span {
        return true;
    }
    let (fraction, ratio) = zigzag(row);
    fraction > cfg.zigzag_fraction && ratio > cfg.zigzag_decay
}

/// Masks rows that are a near-linear trend or a sustained zig-zag.
pub fn filter_outlier_acf(acf: &AcfMatrix, cfg: &EstimatorConfig) -> AcfMatrix {
    let mut out = acf.clone();
    for k in 0..acf.n_rows() {
        if out.valid[k] && is_outlier(acf.row(k).as_slice().expect("row-major"), cfg) {
            out.valid[k] = false;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::sinc;

    fn cfg() -> EstimatorConfig {
        EstimatorConfig::default()
    }

    #[test]
    fn straight_line_is_masked() {
        let row: Vec<f64> = (0..95).map(|i| 1.0 - 2.0 * i as f64 / 94.0).collect();
        assert!(is_outlier(&row, &cfg()));
    }

    #[test]
    fn alternation_is_masked() {
        let row: Vec<f64> = (0..95)
            .map(|i| {
                if i == 0 {
                    1.0
                } else if i % 2 == 0 {
                    0.4
                } else {
                    -0.4
                }
            })
            .collect();
        assert!(is_outlier(&row, &cfg()));
    }

    #[test]
    fn model_rows_are_kept() {
        for step in [0.1, 0.3, 0.6, 1.2, 2.0, 2.8] {
            let row: Vec<f64> = (0..95).map(|i| sinc(step * i as f64)).collect();
            assert!(!is_outlier(&row, &cfg()), "step {step}");
        }
    }

    #[test]
    fn flat_noise_free_row_is_not_a_trend() {
        let row = vec![0.0; 95];
        assert!(!is_outlier(&row, &cfg()));
    }
}
