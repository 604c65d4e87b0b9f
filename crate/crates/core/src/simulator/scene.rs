use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Distribution of incidence directions relative to the motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// Uniform azimuth in the plane of motion.
    Planar,
    /// Uniform over the sphere.
    Spherical,
}

/// Overrides the drawn directions for degenerate test scenes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionMode {
    /// Directions drawn from the geometry.
    #[default]
    Uniform,
    /// Every path shortens at the full target speed.
    Radial,
    /// Every path length stays constant.
    Tangential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeModel {
    #[default]
    Rayleigh,
    Constant,
}

/// Target speed, either constant or piecewise constant as `[start_s, m/s]`
/// breakpoints (speed before the first breakpoint is zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpeedProfile {
    Constant(f64),
    Piecewise(Vec<[f64; 2]>),
}

impl SpeedProfile {
    pub fn speed_at(&self, t: f64) -> f64 {
        match self {
            SpeedProfile::Constant(v) => *v,
            SpeedProfile::Piecewise(points) => {
                points.iter().take_while(|p| p[0] <= t).last().map_or(0.0, |p| p[1])
            }
        }
    }

    /// Distance travelled since `t = 0`.
    pub fn displacement(&self, t: f64) -> f64 {
        match self {
            SpeedProfile::Constant(v) => v * t,
            SpeedProfile::Piecewise(points) => {
                let mut s = 0.0;
                for (i, p) in points.iter().enumerate() {
                    if p[0] >= t {
                        break;
                    }
                    let end = points.get(i + 1).map_or(t, |q| q[0].min(t));
                    s += p[1] * (end - p[0].max(0.0)).max(0.0);
                }
                s
            }
        }
    }

    /// Whether the speed is constant on `[a, b]`, with that speed.
    pub fn constant_on(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            SpeedProfile::Constant(v) => Some(*v),
            SpeedProfile::Piecewise(points) => {
                if points.iter().any(|p| p[0] > a && p[0] < b) {
                    None
                } else {
                    Some(self.speed_at(a))
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SpeedProfile::Constant(v) if !(v.is_finite() && *v >= 0.0) => {
                invalid(format!("speed must be finite and non-negative, got {v}"))
            }
            SpeedProfile::Piecewise(points) => {
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return invalid("speed breakpoints must have increasing times");
                }
                if points.iter().any(|p| !(p[1].is_finite() && p[1] >= 0.0) || !p[0].is_finite()) {
                    return invalid("speed breakpoints must be finite with non-negative speed");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// A path that does not move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticPath {
    /// Propagation delay in seconds.
    pub delay: f64,
    /// Complex gain as `[re, im]`.
    pub gain: [f64; 2],
}

/// Options that only affect waveform-level synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformOptions {
    /// Linear gain from transmit to capture; by default the total path power
    /// is scaled to a quarter of the transmit power.
    pub gain: Option<f64>,
    /// Longest path delay that may occur, seconds.
    pub max_delay: f64,
    /// Taps each side of the fractional-delay interpolator.
    pub interpolator_half_width: usize,
}

impl Default for WaveformOptions {
    fn default() -> Self {
        Self { gain: None, max_delay: 0.1, interpolator_half_width: 4 }
    }
}

fn default_static_paths() -> Vec<StaticPath> {
    vec![StaticPath { delay: 1.0 / crate::SOUND_SPEED, gain: [2.0, 0.0] }]
}

fn default_distance_range() -> [f64; 2] {
    [5.0, 20.0]
}

fn default_dynamic_power() -> f64 {
    1.0
}

/// A diffuse-field scene with known ground truth.
///
/// Scene files are TOML. Required keys: `num_scatterers`, `geometry`
/// (`"planar"` or `"spherical"`), `speed` (number or list of
/// `[start_s, m/s]`), `snr_db` (dynamic power over noise power; `inf` for
/// none), `seed`, `duration` (s). Optional: `directions`
/// (`"uniform"`, `"radial"`, `"tangential"`), `amplitudes`
/// (`"rayleigh"`, `"constant"`), `static_paths` (list of
/// `{ delay, gain = [re, im] }`), `distance_range` (m), `dynamic_power`,
/// and a `[waveform]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScene {
    pub num_scatterers: usize,
    pub geometry: Geometry,
    pub speed: SpeedProfile,
    pub snr_db: f64,
    pub seed: u64,
    pub duration: f64,
    #[serde(default)]
    pub directions: DirectionMode,
    #[serde(default)]
    pub amplitudes: AmplitudeModel,
    #[serde(default = "default_static_paths")]
    pub static_paths: Vec<StaticPath>,
    /// Range of initial scatterer path lengths in metres.
    #[serde(default = "default_distance_range")]
    pub distance_range: [f64; 2],
    /// Total power of the scattered paths; also the reference for the SNR,
    /// so it stays meaningful in static-only scenes.
    #[serde(default = "default_dynamic_power")]
    pub dynamic_power: f64,
    #[serde(default)]
    pub waveform: WaveformOptions,
}

/// Drawn scatterer ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Scatterers {
    /// Projection of the motion on each path, `cos(theta)`; the path length
    /// changes at `speed * cos(theta)`.
    pub projection: Vec<f64>,
    /// Initial path length, m.
    pub distance: Vec<f64>,
    pub amplitude: Vec<f64>,
}

impl SimScene {
    /// A diffuse scene with the usual defaults.
    pub fn diffuse(geometry: Geometry, num_scatterers: usize, speed: f64, seed: u64) -> Self {
        Self {
            num_scatterers,
            geometry,
            speed: SpeedProfile::Constant(speed),
            snr_db: 20.0,
            seed,
            duration: 10.0,
            directions: DirectionMode::Uniform,
            amplitudes: AmplitudeModel::Rayleigh,
            static_paths: default_static_paths(),
            distance_range: default_distance_range(),
            dynamic_power: default_dynamic_power(),
            waveform: WaveformOptions::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scene: Self = toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_scatterers == 0 && self.static_paths.is_empty() {
            return invalid("a scene needs at least one scatterer or static path");
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return invalid(format!("duration must be positive, got {}", self.duration));
        }
        let [lo, hi] = self.distance_range;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return invalid(format!("invalid distance range [{lo}, {hi}]"));
        }
        if self.snr_db.is_nan() {
            return invalid("SNR must be a number");
        }
        if !(self.dynamic_power > 0.0) {
            return invalid("dynamic power must be positive");
        }
        if self.static_paths.iter().any(|p| !(p.delay >= 0.0)) {
            return invalid("static path delays must be non-negative");
        }
        self.speed.validate()
    }

    /// Complex noise variance per CSI sample, relative to the dynamic power.
    pub fn noise_power(&self) -> f64 {
        if self.snr_db == f64::INFINITY {
            0.0
        } else {
            self.dynamic_power / 10f64.powf(self.snr_db / 10.0)
        }
    }

    /// Draws the scatterer ensemble; identical scenes give identical draws.
    pub fn scatterers(&self) -> Scatterers {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.num_scatterers;
        let mut projection = Vec::with_capacity(n);
        let mut distance = Vec::with_capacity(n);
        let mut amplitude = Vec::with_capacity(n);
        let [lo, hi] = self.distance_range;
        for _ in 0..n {
            let cos = match self.geometry {
                Geometry::Planar => (std::f64::consts::TAU * rng.random::<f64>()).cos(),
                Geometry::Spherical => 2.0 * rng.random::<f64>() - 1.0,
            };
            projection.push(match self.directions {
                DirectionMode::Uniform => cos,
                DirectionMode::Radial => -1.0,
                DirectionMode::Tangential => 0.0,
            });
            distance.push(lo + (hi - lo) * rng.random::<f64>());
            amplitude.push(match self.amplitudes {
                // Rayleigh by inversion; 1 - u keeps the log finite
                AmplitudeModel::Rayleigh => (-2.0 * (1.0 - rng.random::<f64>()).ln()).sqrt(),
                AmplitudeModel::Constant => 1.0,
            });
        }
        if n > 0 {
            let total: f64 = amplitude.iter().map(|a| a * a).sum();
            let scale = (self.dynamic_power / total).sqrt();
            amplitude.iter_mut().for_each(|a| *a *= scale);
        }
        Scatterers { projection, distance, amplitude }
    }
}

/// All scatterers approach along their own path at speed `v` (pure radial
/// motion, one Doppler line).
pub fn radial_only_scene(v: f64) -> Result<SimScene> {
    if !(v > 0.0) {
        return invalid(format!("speed must be positive, got {v}"));
    }
    Ok(SimScene { directions: DirectionMode::Radial, ..SimScene::diffuse(Geometry::Spherical, 200, v, 1) })
}

/// The target moves at `v` but every path length stays constant (pure
/// tangential motion, no Doppler and no decorrelation).
pub fn tangential_only_scene(v: f64) -> Result<SimScene> {
    if !(v > 0.0) {
        return invalid(format!("speed must be positive, got {v}"));
    }
    Ok(SimScene {
        directions: DirectionMode::Tangential,
        ..SimScene::diffuse(Geometry::Spherical, 200, v, 1)
    })
}
