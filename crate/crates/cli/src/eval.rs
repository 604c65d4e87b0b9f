//! Evaluation suites over simulated scenes.

use std::io::Write;

use acspeed::estimator::{dfs_baseline, estimate_speed, EstimatorConfig, SpeedEstimate};
use acspeed::simulator::{synth_csi_for_modem, Geometry};
use acspeed::{Error, ModemConfig, SimScene};
use anyhow::Result;
use serde::{Deserialize, Serialize};

/// Suite file, selected by its `kind` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Suite {
    /// Mean error against speed and CSI rate.
    RateSweep(RateSweep),
    /// Doppler baseline against the ACF estimator, per scene.
    DfsVsAse(DfsVsAse),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSweep {
    pub speeds: Vec<f64>,
    pub seeds: Vec<u64>,
    /// CSI decimation factors; 1 is the full interleaved rate.
    #[serde(default = "default_decimations")]
    pub decimations: Vec<usize>,
    #[serde(default = "default_scatterers")]
    pub num_scatterers: usize,
    #[serde(default = "default_geometry")]
    pub geometry: Geometry,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
}

fn default_decimations() -> Vec<usize> {
    vec![1, 2]
}

fn default_scatterers() -> usize {
    1000
}

fn default_geometry() -> Geometry {
    Geometry::Spherical
}

fn default_snr() -> f64 {
    20.0
}

fn default_duration() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DfsVsAse {
    pub scenes: Vec<NamedScene>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedScene {
    pub name: String,
    pub scene: SimScene,
}

impl Suite {
    pub fn from_toml(text: &str) -> Result<Self> {
        let suite: Suite = toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))?;
        suite.validate()?;
        Ok(suite)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = match self {
            Suite::RateSweep(s) => s.speeds.is_empty() || s.seeds.is_empty() || s.decimations.is_empty(),
            Suite::DfsVsAse(s) => s.scenes.is_empty(),
        };
        if empty {
            return Err(Error::InvalidParameter("evaluation suite is empty".into()).into());
        }
        if let Suite::RateSweep(s) = self {
            if s.decimations.contains(&0) {
                return Err(Error::InvalidParameter("decimation factor must be at least 1".into()).into());
            }
        }
        Ok(())
    }

    /// Runs the suite, writes the CSV report and returns a text summary.
    pub fn run<W: Write>(&self, modem: &ModemConfig, est: &EstimatorConfig, mut out: W) -> Result<String> {
        match self {
            Suite::RateSweep(s) => rate_sweep(s, modem, est, &mut out),
            Suite::DfsVsAse(s) => dfs_vs_ase(s, modem, est, &mut out),
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Mean |error| over windows, a window without a speed reading zero; and
/// the share of windows that produced a speed.
fn window_error(est: &[SpeedEstimate], v: f64) -> (f64, f64) {
    let err: Vec<f64> = est.iter().map(|e| (e.speed.unwrap_or(0.0) - v).abs()).collect();
    let found = est.iter().filter(|e| e.speed.is_some()).count();
    (mean(&err), found as f64 / est.len().max(1) as f64)
}

fn rate_sweep<W: Write>(
    s: &RateSweep,
    modem: &ModemConfig,
    est: &EstimatorConfig,
    out: &mut W,
) -> Result<String> {
    writeln!(
        out,
        "# speed [m/s], CSI rate [Hz], mean |error| over windows [m/s] (no reading counts as 0), share of windows with a speed, runs"
    )?;
    writeln!(out, "speed_mps,csi_rate_hz,mean_abs_error_mps,detected_fraction,runs")?;
    let mut summary = String::from("speed_mps  csi_rate_hz  mean_abs_error_mps\n");
    for &v in &s.speeds {
        let mut errs = vec![vec![]; s.decimations.len()];
        let mut found = vec![vec![]; s.decimations.len()];
        for &seed in &s.seeds {
            let scene = SimScene {
                snr_db: s.snr_db,
                duration: s.duration,
                ..SimScene::diffuse(s.geometry, s.num_scatterers, v, seed)
            };
            let csi = synth_csi_for_modem(&scene, modem)?;
            for (i, &d) in s.decimations.iter().enumerate() {
                let (e, f) = window_error(&estimate_speed(&csi.decimate(d), est)?, v);
                errs[i].push(e);
                found[i].push(f);
            }
        }
        for (i, &d) in s.decimations.iter().enumerate() {
            let rate = modem.otdm_csi_rate() / d as f64;
            let e = mean(&errs[i]);
            writeln!(out, "{v},{rate},{e},{},{}", mean(&found[i]), s.seeds.len())?;
            summary += &format!("{v:>9}  {rate:>11}  {e:>18.4}\n");
        }
    }
    Ok(summary)
}

fn dfs_vs_ase<W: Write>(
    s: &DfsVsAse,
    modem: &ModemConfig,
    est: &EstimatorConfig,
    out: &mut W,
) -> Result<String> {
    writeln!(
        out,
        "# scene, true speed [m/s], DFS median [m/s], share of DFS windows flagged aliased, ACF mean [m/s] over windows with a speed, share of windows with a speed"
    )?;
    writeln!(
        out,
        "scene,true_speed_mps,dfs_median_mps,dfs_aliased_fraction,ase_mean_mps,ase_detected_fraction"
    )?;
    let mut summary = String::from("scene  true_speed_mps  dfs_median_mps  ase_mean_mps\n");
    for named in &s.scenes {
        let scene = &named.scene;
        let v = scene
            .speed
            .constant_on(0.0, scene.duration)
            .ok_or_else(|| Error::InvalidParameter(format!("scene {} needs a constant speed", named.name)))?;
        let csi = synth_csi_for_modem(scene, modem)?;
        let dfs = dfs_baseline(&csi, est)?;
        let mut radial: Vec<f64> = dfs.iter().map(|d| d.radial_speed).collect();
        radial.sort_by(f64::total_cmp);
        let dfs_median = radial.get(radial.len() / 2).copied().unwrap_or(f64::NAN);
        let aliased = dfs.iter().filter(|d| d.aliased).count() as f64 / dfs.len().max(1) as f64;
        let estimates = estimate_speed(&csi, est)?;
        let speeds: Vec<f64> = estimates.iter().filter_map(|e| e.speed).collect();
        let detected = speeds.len() as f64 / estimates.len().max(1) as f64;
        let ase = mean(&speeds);
        writeln!(out, "{},{v},{dfs_median},{aliased},{ase},{detected}", named.name)?;
        summary += &format!("{}  {v}  {dfs_median:.4}  {ase:.4}\n", named.name);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_kinds() {
        let s = Suite::from_toml("kind = \"rate-sweep\"\nspeeds = [0.5]\nseeds = [1]\n").unwrap();
        assert!(matches!(s, Suite::RateSweep(ref r) if r.decimations == [1, 2] && r.num_scatterers == 1000));
        let text = r#"
kind = "dfs-vs-ase"
[[scenes]]
name = "a"
scene = { num_scatterers = 10, geometry = "planar", speed = 0.5, snr_db = 20, seed = 1, duration = 2 }
"#;
        assert!(matches!(Suite::from_toml(text).unwrap(), Suite::DfsVsAse(ref d) if d.scenes.len() == 1));
    }

    #[test]
    fn empty_suites_are_rejected() {
        let e = Suite::from_toml("kind = \"rate-sweep\"\nspeeds = []\nseeds = [1]\n").unwrap_err();
        assert!(matches!(e.downcast_ref::<Error>(), Some(Error::InvalidParameter(_))));
        let e = Suite::from_toml("kind = \"dfs-vs-ase\"\nscenes = []\n").unwrap_err();
        assert!(e.to_string().contains("empty"));
    }

    #[test]
    fn unknown_kind_is_a_schema_error() {
        let e = Suite::from_toml("kind = \"nope\"\n").unwrap_err();
        assert!(matches!(e.downcast_ref::<Error>(), Some(Error::Schema(_))));
    }
}
