//! Acoustic channel sounding and device-free speed estimation.
//!
//! A speaker plays two orthogonal Kasami probes, one delayed by half a
//! frame; the receiver estimates the channel per probe and interleaves the
//! two series to double the CSI rate. Speed comes from the first peak of the
//! autocorrelation of the dynamic channel, matched against the spatial
//! correlation of a diffuse sound field.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csi;
pub mod diffusion;
pub mod dsp;
pub mod error;
pub mod estimator;
pub mod io;
pub mod modem;
pub mod sequences;
pub mod simulator;

/// Speed of sound in air, m/s.
pub const SOUND_SPEED: f64 = 343.0;

pub use csi::CsiSeries;
pub use diffusion::{DiffusionModel, ModelKind};
pub use error::{Error, Result};
pub use estimator::{estimate_speed, AcfMatrix, EstimatorConfig, SpeedEstimate};
pub use modem::{Branch, CirFrame, Decoder, ModemConfig, Recording, TxWaveform};
pub use sequences::PnSequence;
pub use simulator::{synth_csi, synth_waveform, SimScene};
