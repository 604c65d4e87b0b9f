//! Sub-lag first-peak refinement by fitting the correlation model to the
//! pooled per-subcarrier ACF samples.
//!
//! Each subcarrier samples the common aligned curve at lags
//! `l * f / f_ref`, so together they cover the lag axis far more densely
//! than any single row. This matters when the first peak sits only a few
//! lags out and a single row's samples straddle it.

use super::acf::AcfMatrix;
use crate::diffusion::ModelKind;

/// Weighted least-squares fit of `A * psi(x0 * p / tau)` over `tau` in
/// `[lo, hi]` (aligned frames); returns the best `tau`.
///
/// `raw` holds unaligned rows on integer lags; `weights` selects and weighs
/// subcarriers. Only samples with aligned lag in `(0, span]` take part.
#[allow(clippy::too_many_arguments)]
pub fn fit_peak_lag(
    raw: &AcfMatrix,
    weights: &[f64],
    f_ref: f64,
    kind: ModelKind,
    x0: f64,
    lo: f64,
    hi: f64,
    span: f64,
) -> Option<f64> {
    let mut samples = Vec::new();
    for (k, &w) in weights.iter().enumerate() {
        if !(w > 0.0) || !raw.valid[k] {
            continue;
        }
        let scale = raw.subcarrier_frequencies[k] / f_ref;
        for (l, &v) in raw.row(k).iter().enumerate().skip(1) {
            let p = l as f64 * scale;
            if p > span {
                break;
            }
            samples.push((p, v, w));
        }
    }
    if samples.len() < 3 || !(lo > 0.0) || !(hi > lo) {
        return None;
    }
    let cost = |tau: f64| -> f64 {
        let (mut yy, mut ym, mut mm) = (0.0, 0.0, 0.0);
        for &(p, y, w) in &samples {
            let m = kind.correlation(x0 * p / tau);
            yy += w * y * y;
            ym += w * y * m;
            mm += w * m * m;
        }
        let amp = if mm > 0.0 { (ym / mm).max(0.0) } else { 0.0 };
        yy - 2.0 * amp * ym + amp * amp * mm
    };
    let steps = 160;
    let grid: Vec<f64> = (0..=steps).map(|i| lo * (hi / lo).powf(i as f64 / steps as f64)).collect();
    let costs: Vec<f64> = grid.iter().map(|&t| cost(t)).collect();
    let best = costs.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?.0;
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(steps)]);
    // golden-section search inside the bracketing cells
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = cost(d);
        }
    }
    Some(0.5 * (a + b))
}
