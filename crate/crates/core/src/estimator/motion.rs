//! Zero-crossing motion indicator.

use super::acf::AcfMatrix;
use super::align::pool_rows_counted;
use super::config::EstimatorConfig;

/// Counts sign changes of `row` after lag 0. Values inside `[-floor, floor]`
/// carry no sign, so only crossings between clearly positive and clearly
/// negative stretches count.
pub fn zcc_motion(row: &[f64], floor: f64) -> usize {
    zcc_banded(row, &vec![floor; row.len()])
}

/// [`zcc_motion`] with a separate floor per lag; lags with an infinite
/// floor are skipped.
pub fn zcc_banded(row: &[f64], floors: &[f64]) -> usize {
    let mut last = 0i8;
    let mut count = 0;
    for (&v, &floor) in row.iter().zip(floors).skip(1) {
        let sign = if v > floor {
            1
        } else if v < -floor {
            -1
        } else {
            continue;
        };
        if last != 0 && sign != last {
            count += 1;
        }
        last = sign;
    }
    count
}

/// Hysteresis floor for an average of `rows` ACF rows over `frames` frames:
/// three standard deviations of the white-noise ACF, and never below the
/// configured floor.
pub fn zcc_floor(cfg: &EstimatorConfig, frames: usize, rows: usize) -> f64 {
    let noise = 1.0 / ((frames * rows.max(1)) as f64).sqrt();
    cfg.zcc_floor.max(3.0 * noise)
}

/// Zero-crossing count of the valid rows averaged on the aligned lag axis:
/// integer-lag rows are pooled, already aligned rows are averaged. `None`
/// when no row is valid.
pub fn motion_zcc(acf: &AcfMatrix, cfg: &EstimatorConfig) -> Option<usize> {
    if acf.reference_frequency.is_some() {
        let mean = acf.mean_row()?;
        return Some(zcc_motion(&mean, zcc_floor(cfg, acf.window_frames, acf.n_valid())));
    }
    let f_ref = cfg.reference_frequency(&acf.subcarrier_frequencies);
    let (row, counts) = pool_rows_counted(acf, f_ref, cfg.oversample, None).ok()?;
    // each bin averages its own number of independent samples
    let floors: Vec<f64> = counts
        .iter()
        .map(|&c| if c == 0 { f64::INFINITY } else { zcc_floor(cfg, acf.window_frames, c) })
        .collect();
    Some(zcc_banded(&row, &floors))
}

/// Motion when the zero-crossing count exceeds the configured threshold.
pub fn motion_detect(acf: &AcfMatrix, cfg: &EstimatorConfig) -> bool {
    motion_zcc(acf, cfg).is_some_and(|z| z as f64 > cfg.zcc_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_clear_crossings_only() {
        assert_eq!(zcc_motion(&[1.0, 0.5, -0.5, 0.5, -0.5], 0.1), 3);
        assert_eq!(zcc_motion(&[1.0, 0.05, -0.05, 0.05, -0.05], 0.1), 0);
        // dithering around zero between two real lobes counts once
        assert_eq!(zcc_motion(&[1.0, 0.5, 0.01, -0.01, 0.01, -0.5], 0.1), 1);
    }

    #[test]
    fn flat_row_has_no_crossings() {
        let row: Vec<f64> = (0..100).map(|i| 1.0 - 1e-4 * i as f64).collect();
        assert_eq!(zcc_motion(&row, 0.02), 0);
    }

    #[test]
    fn floor_scales_with_averaging() {
        let cfg = EstimatorConfig::default();
        assert!((zcc_floor(&cfg, 188, 63) - 3.0 / (188.0f64 * 63.0).sqrt()).abs() < 1e-12);
        assert_eq!(zcc_floor(&cfg, 1_000_000, 63), 0.02);
    }

    #[test]
    fn banded_floor_skips_unfilled_lags() {
        let row = [1.0, -0.5, 0.3, -0.3];
        assert_eq!(zcc_banded(&row, &[0.1; 4]), 2);
        assert_eq!(zcc_banded(&row, &[0.1, 0.1, f64::INFINITY, 0.1]), 0);
        assert_eq!(zcc_banded(&row, &[0.1, 0.1, 0.4, 0.1]), 0);
    }
}
