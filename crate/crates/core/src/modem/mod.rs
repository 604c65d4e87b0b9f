//! Sounding modem: probe synthesis, OTDM transmission and channel
//! estimation at the receiver.

mod config;
mod rx;
mod tx;

use serde::{Deserialize, Serialize};

pub use config::ModemConfig;
pub use rx::*;
pub use tx::*;

use crate::error::{invalid, Result};
use crate::SOUND_SPEED;

/// Which of the two orthogonal probes a frame belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// In-phase branch, starts at sample 0.
    One,
    /// Quadrature branch, delayed by half a frame.
    Two,
}

impl Branch {
    pub fn slot(self) -> usize {
        match self {
            Branch::One => 0,
            Branch::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.slot() as u8 + 1
    }
}

/// Largest speed whose phase rotation is still unambiguous at `csi_rate`:
/// `F_s / (2 f) * c`.
pub fn max_measurable_speed(csi_rate: f64, carrier: f64) -> f64 {
    max_measurable_speed_with(csi_rate, carrier, SOUND_SPEED)
}

pub fn max_measurable_speed_with(csi_rate: f64, carrier: f64, sound_speed: f64) -> f64 {
    if carrier <= 0.0 {
        return 0.0;
    }
    csi_rate / (2.0 * carrier) * sound_speed
}

/// Highest CSI rate at which echoes over `path_length` metres die out
/// before the next probe: `c / x`.
pub fn csi_rate_limit(path_length: f64) -> Result<f64> {
    if !(path_length > 0.0) || !path_length.is_finite() {
        return invalid(format!("path length must be positive, got {path_length}"));
    }
    Ok(SOUND_SPEED / path_length)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_limit() {
        assert!((max_measurable_speed(49.0, 20_000.0) - 0.420_175).abs() < 1e-6);
        assert!((max_measurable_speed(187.5, 20_250.0) - 1.588).abs() < 1e-3);
        assert_eq!(max_measurable_speed(0.0, 20_000.0), 0.0);
    }

    #[test]
    fn rate_limit() {
        assert!((csi_rate_limit(7.0).unwrap() - 49.0).abs() < 1e-12);
        assert!((csi_rate_limit(3.5).unwrap() - 98.0).abs() < 1e-12);
        assert!((csi_rate_limit(343.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(csi_rate_limit(0.0).is_err());
        assert!(csi_rate_limit(-1.0).is_err());
    }
}
