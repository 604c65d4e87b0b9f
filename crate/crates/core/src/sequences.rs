//! Kasami pseudo-noise sequences.
//!
//! The probe waveform is built from members of the Kasami *small set*. For an
//! even LFSR degree `n` the small set has `2^(n/2)` members of length
//! `L = 2^n - 1`, and every periodic cross-correlation between distinct
//! members takes one of the three values `-1`, `-(2^(n/2) + 1)` or
//! `2^(n/2) - 1`. For `n = 6` that is `{-1, -9, 7}` against a peak of 63.
//!
//! The base m-sequence for each degree comes from a fixed primitive
//! polynomial, so sequences are bit-exact across runs:
//!
//! | degree | polynomial                   |
//! |--------|------------------------------|
//! | 4      | x^4 + x + 1                  |
//! | 6      | x^6 + x + 1                  |
//! | 8      | x^8 + x^4 + x^3 + x^2 + 1    |
//! | 10     | x^10 + x^3 + 1               |
//! | 12     | x^12 + x^6 + x^4 + x + 1     |
//! | 14     | x^14 + x^10 + x^6 + x + 1    |
//! | 16     | x^16 + x^12 + x^3 + x + 1    |
//!
//! Member 0 is the m-sequence itself; member `k >= 1` is the m-sequence
//! XOR-ed with its decimation by `2^(n/2) + 1` (period `2^(n/2) - 1`, taken
//! at the first phase that is not all zeros), cyclically shifted by `k - 1`.
//! Bits map to chips as `0 -> +1`, `1 -> -1`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Lower-order exponents (constant term included) of the primitive polynomial
/// used for each supported degree.
fn primitive_taps(degree: u32) -> Option<&'static [u32]> {
    Some(match degree {
        4 => &[1, 0],
        6 => &[1, 0],
        8 => &[4, 3, 2, 0],
        10 => &[3, 0],
        12 => &[6, 4, 1, 0],
        14 => &[10, 6, 1, 0],
        16 => &[12, 3, 1, 0],
        _ => return None,
    })
}

/// A bipolar Kasami spreading code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PnSequence {
    degree: u32,
    index: u32,
    chips: Vec<i8>,
}

impl PnSequence {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Position of this member inside the Kasami small set.
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn chips_f64(&self) -> Vec<f64> {
        self.chips.iter().map(|&c| f64::from(c)).collect()
    }

    /// Writes the chips as CSV, one `index,chip` row per chip after a
    /// comment line and a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# Kasami degree {} member {}; chip is +1 or -1 (dimensionless)",
            self.degree, self.index
        )?;
        writeln!(out, "index,chip")?;
        for (i, c) in self.chips.iter().enumerate() {
            writeln!(out, "{i},{c}")?;
        }
        Ok(())
    }
}

/// Number of members in the Kasami small set of the given degree.
pub fn small_set_size(degree: u32) -> usize {
    1usize << (degree / 2)
}

/// Maximal-length sequence of the given degree as bits, starting from the
/// state `0...01`.
pub fn m_sequence(degree: u32) -> Result<Vec<u8>> {
    let Some(taps) = primitive_taps(degree) else {
        return invalid(format!("no primitive polynomial for degree {degree}"));
    };
    let n = degree as usize;
    let len = (1usize << n) - 1;
    let mut bits = vec![0u8; len + n];
    bits[n - 1] = 1;
    for t in 0..len {
        let mut next = 0u8;
        for &e in taps {
            next ^= bits[t + e as usize];
        }
        bits[t + n] = next;
    }
    bits.truncate(len);
    Ok(bits)
}

/// Generates the `index`-th member of the Kasami small set of length
/// `2^degree - 1`.
pub fn generate_kasami(degree: u32, index: u32) -> Result<PnSequence> {
    if !degree.is_multiple_of(2) {
        return invalid(format!("Kasami degree must be even, got {degree}"));
    }
    if degree < 4 {
        return invalid(format!("Kasami degree must be at least 4, got {degree}"));
    }
    let set = small_set_size(degree);
    if index as usize >= set {
        return invalid(format!("Kasami index {index} outside small set of size {set} (degree {degree})"));
    }
    let u = m_sequence(degree)?;
    let len = u.len();
    let bits: Vec<u8> = if index == 0 {
        u
    } else {
        let q = (1usize << (degree / 2)) + 1;
        let w = decimate_nonzero(&u, q);
        let shift = index as usize - 1;
        (0..len).map(|t| u[t] ^ w[(t + shift) % w.len()]).collect()
    };
    let chips = bits.iter().map(|&b| if b == 0 { 1 } else { -1 }).collect();
    Ok(PnSequence { degree, index, chips })
}

/// Decimation `u[q t + j]` by `q`, at the first phase `j` that is not
/// identically zero. Some phases of the m-sequence decimate to all zeros,
/// which would collapse the small set onto its first member.
fn decimate_nonzero(u: &[u8], q: usize) -> Vec<u8> {
    let len = u.len();
    let period = len / q;
    (0..q)
        .map(|j| (0..period).map(|t| u[(q * t + j) % len]).collect::<Vec<u8>>())
        .find(|w| w.contains(&1))
        .expect("an m-sequence has a nonzero decimation")
}

/// Periodic correlation `c[l] = sum_t a[t] * b[(t + l) mod L]`, exact in
/// integer arithmetic.
pub fn periodic_correlation(a: &PnSequence, b: &PnSequence) -> Result<Vec<i64>> {
    if a.degree != b.degree || a.len() != b.len() {
        return invalid(format!("correlating sequences of different lengths ({} vs {})", a.len(), b.len()));
    }
    let len = a.len();
    Ok((0..len)
        .map(|lag| {
            a.chips.iter().enumerate().map(|(t, &x)| i64::from(x) * i64::from(b.chips[(t + lag) % len])).sum()
        })
        .collect())
}
