//! Shared fixtures for the benchmarks.

use acspeed::modem::generate_tx;
use acspeed::simulator::{synth_csi_for_modem, Geometry};
use acspeed::{CsiSeries, ModemConfig, Recording, SimScene};

/// Diffuse spherical scene at walking speed.
pub fn walking_scene(num_scatterers: usize, duration: f64) -> SimScene {
    SimScene { duration, ..SimScene::diffuse(Geometry::Spherical, num_scatterers, 1.0, 1) }
}

/// CSI of [`walking_scene`] on the default modem grid.
pub fn walking_csi(duration: f64) -> CsiSeries {
    synth_csi_for_modem(&walking_scene(200, duration), &ModemConfig::default())
        .expect("default scene synthesizes")
}

/// Loopback recording of `seconds` of probe.
pub fn loopback(seconds: f64) -> Recording {
    let cfg = ModemConfig::default();
    let frames = (seconds * cfg.branch_csi_rate()).round() as usize;
    generate_tx(&cfg, frames).expect("default config is valid").recording()
}
