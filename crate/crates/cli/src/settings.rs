//! Layered configuration: defaults, then the config file, then environment
//! and flags (clap merges those two, flags first).

use std::path::Path;

use acspeed::{EstimatorConfig, ModemConfig};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::args::{EstimatorArgs, ModemArgs};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub modem: ModemConfig,
    pub estimator: EstimatorConfig,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| acspeed::Error::Schema(e.message().to_string()).into())
    }

    pub fn apply_modem(&mut self, a: &ModemArgs) {
        let m = &mut self.modem;
        if let Some(v) = a.sample_rate {
            m.audio_sample_rate = v;
        }
        if let Some(v) = a.frame_length {
            m.frame_length = v;
        }
        if let Some(v) = a.carrier {
            m.carrier_frequency = v;
        }
        if let Some(v) = a.amplitude {
            m.amplitude = v;
        }
    }

    pub fn apply_estimator(&mut self, a: &EstimatorArgs) {
        let e = &mut self.estimator;
        if let Some(v) = a.window {
            e.window = v;
        }
        if let Some(v) = a.step {
            e.step = v;
        }
        if let Some(v) = a.max_lag {
            e.max_lag = v;
        }
        if let Some(v) = a.model {
            e.model = v;
        }
        if a.f_ref.is_some() {
            e.f_ref = a.f_ref;
        }
        if let Some(v) = a.zcc_threshold {
            e.zcc_threshold = v;
        }
        if let Some(v) = a.min_prominence {
            e.min_prominence = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use acspeed::ModelKind;

    #[test]
    fn file_values_yield_to_flags() {
        let mut s =
            Settings::from_toml("[estimator]\nwindow = 2.0\nstep = 0.5\n[modem]\namplitude = 1.0\n").unwrap();
        assert_eq!(s.estimator.window, 2.0);
        assert_eq!(s.modem.frame_length, 512);
        s.apply_estimator(&EstimatorArgs {
            step: Some(0.25),
            model: Some(ModelKind::Planar2D),
            ..Default::default()
        });
        assert_eq!((s.estimator.window, s.estimator.step), (2.0, 0.25));
        assert_eq!(s.estimator.model, ModelKind::Planar2D);
        assert_eq!(s.modem.amplitude, 1.0);
    }

    #[test]
    fn unknown_keys_are_schema_errors() {
        let e = Settings::from_toml("[estimator]\nwindw = 2.0\n").unwrap_err();
        assert!(matches!(e.downcast_ref::<acspeed::Error>(), Some(acspeed::Error::Schema(_))));
        assert!(e.to_string().contains("windw"));
    }
}
