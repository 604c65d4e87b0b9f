//! Spatial correlation of a diffuse sound field and the speed it implies.
//!
//! For a plane wave arriving from direction `theta`, pressure at two points
//! `x` apart correlates as `cos(k x cos(theta))`. Averaging over directions
//! distributed in a plane gives `J0(k x)`; over a sphere, `sin(k x)/(k x)`.
//! A target moving at `v` covers `x = v * tau` in lag `tau`, so the first
//! positive-lag maximum of the correlation pins down `k v tau_s = x0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SOUND_SPEED;

/// Geometry of the incident-wave distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum ModelKind {
    #[serde(rename = "2d")]
    Planar2D,
    #[default]
    #[serde(rename = "3d")]
    Spherical3D,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Planar2D => "2d",
            ModelKind::Spherical3D => "3d",
        }
    }

    /// Correlation as a function of the dimensionless argument `k x`.
    pub fn correlation(self, x: f64) -> f64 {
        match self {
            ModelKind::Planar2D => bessel_j0(x),
            ModelKind::Spherical3D => sinc(x),
        }
    }

    /// First derivative of [`ModelKind::correlation`] with respect to `x`.
    pub fn correlation_slope(self, x: f64) -> f64 {
        match self {
            ModelKind::Planar2D => -bessel_j1(x),
            ModelKind::Spherical3D => {
                if x.abs() < 1e-4 {
                    -x / 3.0
                } else {
                    (x * x.cos() - x.sin()) / (x * x)
                }
            }
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2d" | "planar" | "planar2d" => Ok(ModelKind::Planar2D),
            "3d" | "spherical" | "spherical3d" => Ok(ModelKind::Spherical3D),
            other => {
                Err(Error::InvalidParameter(format!("unknown model kind `{other}` (expected 2d or 3d)")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionModel {
    pub kind: ModelKind,
    /// Abscissa `x0` of the first strictly positive local maximum.
    pub reference_point: f64,
    /// Speed of sound in m/s.
    pub sound_speed: f64,
}

impl DiffusionModel {
    pub fn new(kind: ModelKind) -> Self {
        Self::with_sound_speed(kind, SOUND_SPEED)
    }

    pub fn with_sound_speed(kind: ModelKind, sound_speed: f64) -> Self {
        Self { kind, reference_point: reference_point(kind), sound_speed }
    }

    pub fn wavenumber(&self, f: f64) -> f64 {
        2.0 * PI * f / self.sound_speed
    }
}

impl Default for DiffusionModel {
    fn default() -> Self {
        Self::new(ModelKind::default())
    }
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Correlation contributed by a single incidence direction.
pub fn psi_directional(x: f64, theta: f64, k: f64) -> f64 {
    (k * x * theta.cos()).cos()
}

/// Theoretical correlation at speed `v`, lag `tau` and frequency `f`.
pub fn psi_p(model: &DiffusionModel, v: f64, tau: f64, f: f64) -> f64 {
    let k = model.wavenumber(f);
    model.kind.correlation(k * v * tau)
}

/// First strictly positive local maximum of the correlation curve, located
/// by bracketed bisection on the derivative and cached per kind.
pub fn reference_point(kind: ModelKind) -> f64 {
    static PLANAR: OnceLock<f64> = OnceLock::new();
    static SPHERICAL: OnceLock<f64> = OnceLock::new();
    let cell = match kind {
        ModelKind::Planar2D => &PLANAR,
        ModelKind::Spherical3D => &SPHERICAL,
    };
    *cell.get_or_init(|| locate_first_maximum(kind))
}

fn locate_first_maximum(kind: ModelKind) -> f64 {
    let step = 1e-2;
    let mut lo = step;
    let mut slope_lo = kind.correlation_slope(lo);
    loop {
        let hi = lo + step;
        let slope_hi = kind.correlation_slope(hi);
        // a maximum is where the slope goes from rising to falling
        if slope_lo > 0.0 && slope_hi <= 0.0 {
            return bisect(|x| kind.correlation_slope(x), lo, hi);
        }
        lo = hi;
        slope_lo = slope_hi;
        assert!(lo < 100.0, "no local maximum found for {kind}");
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-15 * mid.abs().max(1.0) {
            break;
        }
        let f_mid = f(mid);
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Speed implied by a first peak at lag `tau_s` on a subcarrier (or aligned
/// reference) at `f_ref`: `v = x0 c / (2 pi f_ref tau_s)`.
pub fn speed_from_peak(model: &DiffusionModel, tau_s: f64, f_ref: f64) -> Result<f64> {
    if !(tau_s > 0.0) || !tau_s.is_finite() {
        return Err(Error::NoPeak(format!("peak lag {tau_s} is not positive")));
    }
    if !(f_ref > 0.0) {
        return Err(Error::InvalidParameter(format!("reference frequency {f_ref} must be positive")));
    }
    Ok(model.reference_point * model.sound_speed / (2.0 * PI * f_ref * tau_s))
}

/// Lag of the first correlation peak for a known speed; the inverse of
/// [`speed_from_peak`].
pub fn peak_lag_for_speed(model: &DiffusionModel, v: f64, f: f64) -> f64 {
    model.reference_point / (model.wavenumber(f) * v)
}

const SERIES_LIMIT: f64 = 12.0;

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        bessel_series(0, ax)
    } else {
        bessel_asymptotic(0, ax)
    }
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT { bessel_series(1, ax) } else { bessel_asymptotic(1, ax) };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

// sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)
fn bessel_series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = match order {
        0 => 1.0,
        _ => half,
    };
    let mut sum = term;
    for k in 1..200u32 {
        term *= q / (f64::from(k) * f64::from(k + order));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 4 {
            break;
        }
    }
    sum
}

// Hankel expansion, truncated at the smallest term.
fn bessel_asymptotic(order: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(order * order);
    let chi = x - (0.5 * f64::from(order) + 0.25) * PI;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60u32 {
        let term = a / x.powi(k as i32);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 {
            break;
        }
        let odd = f64::from(2 * k + 1);
        a *= (mu - odd * odd) / (f64::from(k + 1) * 8.0);
    }
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
