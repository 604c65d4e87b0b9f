//! Small DSP building blocks shared by the modem and the simulator.
//!
//! All transforms here are unitary: forward and inverse both scale by
//! `1/sqrt(n)`, so Parseval holds without extra factors.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn fft_unitary(buf: &mut [Complex64]) {
    transform(buf, false);
}

pub fn ifft_unitary(buf: &mut [Complex64]) {
    transform(buf, true);
}

fn transform(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    plan.process(buf);
    let scale = 1.0 / (n as f64).sqrt();
    for x in buf.iter_mut() {
        *x *= scale;
    }
}

/// Signed FFT bin index for position `i` of an `n`-point transform.
pub fn signed_bin(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Position of signed bin `k` in an `n`-point transform.
pub fn bin_position(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

fn blackman(i: usize, n: usize) -> f64 {
    if n == 1 {
        return 1.0;
    }
    let r = i as f64 / (n - 1) as f64;
    0.42 - 0.5 * (2.0 * PI * r).cos() + 0.08 * (4.0 * PI * r).cos()
}

/// Linear-phase low-pass FIR (Blackman-windowed sinc) with unit DC gain.
/// `num_taps` must be odd so the group delay is an integer number of samples.
pub fn lowpass_fir(num_taps: usize, cutoff_hz: f64, sample_rate: f64) -> Vec<f64> {
    assert!(num_taps % 2 == 1, "FIR length must be odd");
    let fc = cutoff_hz / sample_rate;
    let mid = (num_taps / 2) as f64;
    let mut taps: Vec<f64> = (0..num_taps)
        .map(|i| {
            let t = i as f64 - mid;
            let ideal = if t == 0.0 { 2.0 * fc } else { (2.0 * PI * fc * t).sin() / (PI * t) };
            ideal * blackman(i, num_taps)
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= dc;
    }
    taps
}

/// Zero-phase application of an odd-length linear-phase FIR: the output is
/// advanced by the filter's group delay so it lines up with the input.
pub fn filter_zero_phase(input: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let n = input.len();
    let half = taps.len() / 2;
    (0..n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            // y[i] = sum_k h[k] x[i + half - k]
            let k_lo = (i + half + 1).saturating_sub(n);
            let k_hi = (i + half).min(taps.len() - 1);
            for k in k_lo..=k_hi {
                acc += input[i + half - k] * taps[k];
            }
            acc
        })
        .collect()
}

/// Polyphase table of a Blackman-windowed sinc interpolator with
/// `half_width` taps each side, quantized to `phases` fractional positions.
#[derive(Debug, Clone)]
pub struct SincInterpolator {
    half_width: usize,
    phases: usize,
    table: Vec<f64>,
}

impl SincInterpolator {
    pub fn new(half_width: usize, phases: usize) -> Self {
        let width = 2 * half_width;
        let mut table = vec![0.0; (phases + 1) * width];
        for p in 0..=phases {
            let frac = p as f64 / phases as f64;
            let row = &mut table[p * width..(p + 1) * width];
            for (j, w) in row.iter_mut().enumerate() {
                // tap j sits at offset (j - half_width + 1) from the integer base
                let t = j as f64 - half_width as f64 + 1.0 - frac;
                let x = t / half_width as f64;
                let window = if x.abs() >= 1.0 {
                    0.0
                } else {
                    0.42 + 0.5 * (PI * x).cos() + 0.08 * (2.0 * PI * x).cos()
                };
                let s = if t.abs() < 1e-12 { 1.0 } else { (PI * t).sin() / (PI * t) };
                *w = s * window;
            }
            let sum: f64 = row.iter().sum();
            for w in row.iter_mut() {
                *w /= sum;
            }
        }
        Self { half_width, phases, table }
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Value of `signal` at fractional position `pos`; samples outside the
    /// signal read as zero.
    pub fn sample(&self, signal: &[Complex64], pos: f64) -> Complex64 {
        let base = pos.floor();
        let frac = pos - base;
        let p = (frac * self.phases as f64).round() as usize;
        let width = 2 * self.half_width;
        let row = &self.table[p * width..(p + 1) * width];
        let start = base as i64 - self.half_width as i64 + 1;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &w) in row.iter().enumerate() {
            let idx = start + j as i64;
            if idx >= 0 && (idx as usize) < signal.len() {
                acc += signal[idx as usize] * w;
            }
        }
        acc
    }
}
