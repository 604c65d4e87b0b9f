//! First-peak picking on correlation curves.

/// A local maximum with its prominence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPeak {
    /// Grid index of the sampled maximum.
    pub index: usize,
    /// Parabolically refined position in grid units.
    pub position: f64,
    pub height: f64,
    pub prominence: f64,
}

/// Centred moving average of odd length `taps`; the ends average over the
/// samples that exist.
pub fn smooth(x: &[f64], taps: usize) -> Vec<f64> {
    let half = taps / 2;
    if half == 0 {
        return x.to_vec();
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(x.len() - 1);
            x[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Height of the peak at `i` above the higher of the two lowest points
/// reached before the curve climbs above it on either side. A side with no
/// samples at all does not count.
pub fn prominence(x: &[f64], i: usize) -> f64 {
    let peak = x[i];
    let base = |side: &mut dyn ExactSizeIterator<Item = &f64>| -> Option<f64> {
        if side.len() == 0 {
            return None;
        }
        let mut lowest = peak;
        for &v in side {
            if v > peak {
                break;
            }
            lowest = lowest.min(v);
        }
        Some(lowest)
    };
    let left = base(&mut x[..i].iter().rev());
    let right = base(&mut x[i + 1..].iter());
    match (left, right) {
        (Some(l), Some(r)) => peak - l.max(r),
        (Some(b), None) | (None, Some(b)) => peak - b,
        (None, None) => 0.0,
    }
}

/// Smallest-lag local maximum (lag 0 excluded) whose prominence reaches
/// `min_prominence`, after a `smoothing`-tap moving average. Plateaus
/// resolve to their first sample, so ties go to the smaller lag.
pub fn first_peak(x: &[f64], smoothing: usize, min_prominence: f64) -> Option<FirstPeak> {
    if x.len() < 3 {
        return None;
    }
    let y = smooth(x, smoothing);
    let mut i = 1;
    while i + 1 < y.len() {
        if y[i] > y[i - 1] {
            // walk across a plateau
            let mut j = i;
            while j + 1 < y.len() && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < y.len() && y[j + 1] < y[i] {
                let p = prominence(&y, i);
                if p >= min_prominence {
                    return Some(FirstPeak {
                        index: i,
                        position: parabolic(&y, i),
                        height: y[i],
                        prominence: p,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    None
}

/// Vertex of the parabola through samples `i - 1, i, i + 1`.
pub fn parabolic(y: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= y.len() {
        return i as f64;
    }
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let den = a - 2.0 * b + c;
    if den.abs() < 1e-300 {
        return i as f64;
    }
    let d = 0.5 * (a - c) / den;
    i as f64 + d.clamp(-0.5, 0.5)
}
