use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use acspeed::diffusion::reference_point;
use acspeed::estimator::{
    align_frequency, analyze_window, channel_power, compute_acf, dfs_baseline, estimate_speed, window_starts,
    Window,
};
use acspeed::io::{
    load_csi, read_wav, save_csi, write_acf_csv, write_dfs_csv, write_json_lines, write_speed_csv, write_wav,
};
use acspeed::modem::generate_tx;
use acspeed::sequences::generate_kasami;
use acspeed::simulator::{synth_csi_for_modem, synth_waveform, Geometry};
use acspeed::{Decoder, DiffusionModel, Error, ModelKind, SimScene};
use anyhow::{Context, Result};

use crate::args::*;
use crate::eval::Suite;
use crate::manifest::{RunManifest, Snapshot};
use crate::settings::Settings;

/// How a command gets its settings: resolved afresh, or fixed by a
/// manifest being re-run.
pub struct Run {
    pub config_path: Option<PathBuf>,
    pub args: Vec<String>,
    pub fixed: Option<Snapshot>,
}

impl Run {
    fn settings(&self, modem: Option<&ModemArgs>, est: Option<&EstimatorArgs>) -> Result<Settings> {
        if let Some(snap) = &self.fixed {
            return Ok(snap.settings.clone());
        }
        let mut s = Settings::load(self.config_path.as_deref())?;
        if let Some(m) = modem {
            s.apply_modem(m);
        }
        if let Some(e) = est {
            s.apply_estimator(e);
        }
        Ok(s)
    }

    fn manifest(&self, command: &str, snapshot: Snapshot) -> RunManifest {
        RunManifest::new(command, self.args.clone(), snapshot)
    }

    fn scene(&self, path: &Path) -> Result<SimScene> {
        if let Some(scene) = self.fixed.as_ref().and_then(|s| s.scene.clone()) {
            return Ok(scene);
        }
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading scene {}", path.display()))?;
        SimScene::from_toml_str(&text).with_context(|| format!("in scene {}", path.display()))
    }

    fn suite(&self, path: &Path) -> Result<Suite> {
        if let Some(suite) = self.fixed.as_ref().and_then(|s| s.suite.clone()) {
            return Ok(suite);
        }
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading suite {}", path.display()))?;
        Suite::from_toml(&text).with_context(|| format!("in suite {}", path.display()))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn snapshot(settings: &Settings) -> Snapshot {
    Snapshot { settings: settings.clone(), ..Snapshot::default() }
}

pub fn gen_tx(run: &Run, a: &GenTxArgs) -> Result<()> {
    let s = run.settings(Some(&a.modem), None)?;
    let cfg = &s.modem;
    cfg.validate()?;
    if !(a.duration > 0.0) {
        return Err(Error::InvalidParameter(format!("duration must be positive, got {}", a.duration)).into());
    }
    let samples = (a.duration * cfg.sample_rate()).round() as usize;
    let frames = (samples / cfg.frame_length).max(1);
    let tx = generate_tx(cfg, frames)?;
    let mut rec = tx.recording();
    // the half-frame tail of the delayed branch is cut to honour the duration
    rec.pcm.truncate(samples);
    write_wav(&a.out, &rec).with_context(|| format!("writing {}", a.out.display()))?;
    let mut m = run.manifest("gen-tx", snapshot(&s));
    m.outputs.push(a.out.clone());
    m.warnings.clipped_samples = tx.metadata.clipped;
    if tx.metadata.clipped > 0 {
        m.warn(format!("{} samples clipped", tx.metadata.clipped));
    }
    println!("wrote {} samples ({frames} frames) to {}", rec.pcm.len(), a.out.display());
    m.finish()
}

pub fn decode(run: &Run, a: &DecodeArgs) -> Result<()> {
    let s = run.settings(Some(&a.modem), None)?;
    let input = read_wav(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let mut m = run.manifest("decode", snapshot(&s));
    m.inputs.push(a.input.clone());
    if input.truncated {
        m.warnings.truncated_inputs += 1;
        m.warn(format!("{} is truncated; decoding the samples present", a.input.display()));
    }
    let decoded = Decoder::new(&s.modem)?.decode(&input.recording)?;
    save_csi(&a.out, &decoded.csi, serde_json::to_value(&s.modem)?)
        .with_context(|| format!("writing {}", a.out.display()))?;
    m.outputs.push(a.out.clone());
    println!(
        "{} frames at {} Hz, sync offset {} samples",
        decoded.csi.n_frames(),
        decoded.csi.csi_rate(),
        decoded.sync_offset
    );
    m.finish()
}

pub fn estimate(run: &Run, a: &EstimateArgs) -> Result<()> {
    let s = run.settings(None, Some(&a.estimator))?;
    let cfg = &s.estimator;
    cfg.validate()?;
    let (csi, _) = load_csi(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let mut m = run.manifest("estimate", snapshot(&s));
    m.inputs.push(a.input.clone());
    let est = estimate_speed(&csi, cfg)?;
    let mut out = create(&a.out)?;
    write_speed_csv(&mut out, &est)?;
    out.flush()?;
    m.outputs.push(a.out.clone());
    if let Some(path) = &a.json {
        let mut out = create(path)?;
        write_json_lines(&mut out, &est)?;
        out.flush()?;
        m.outputs.push(path.clone());
    }
    if let Some(path) = &a.dfs {
        let mut out = create(path)?;
        write_dfs_csv(&mut out, &dfs_baseline(&csi, cfg)?)?;
        out.flush()?;
        m.outputs.push(path.clone());
    }
    if let Some(dir) = &a.acf_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let model = DiffusionModel::with_sound_speed(cfg.model, cfg.sound_speed);
        for (k, start) in window_starts(csi.n_frames(), csi.csi_rate(), cfg).into_iter().enumerate() {
            let w = analyze_window(&csi, start, cfg, &model)?;
            let path = dir.join(format!("window_{k:05}.csv"));
            let mut out = create(&path)?;
            write_acf_csv(&mut out, &w.acf)?;
            out.flush()?;
        }
        // one sidecar for the directory, beside it
        m.outputs.push(dir.clone());
    }
    let speeds: Vec<f64> = est.iter().filter_map(|e| e.speed).collect();
    let moving = est.iter().filter(|e| e.motion).count();
    if speeds.is_empty() {
        println!("{} windows, {moving} with motion, no speed", est.len());
    } else {
        let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
        println!(
            "{} windows, {moving} with motion, {} with a speed, mean {mean:.3} m/s ({})",
            est.len(),
            speeds.len(),
            cfg.model
        );
    }
    m.finish()
}

pub fn simulate(run: &Run, a: &SimulateArgs) -> Result<()> {
    let s = run.settings(Some(&a.modem), Some(&a.estimator))?;
    s.modem.validate()?;
    let scene = run.scene(&a.scene)?;
    scene.validate()?;
    let mut m = run.manifest("simulate", Snapshot { scene: Some(scene.clone()), ..snapshot(&s) });
    m.inputs.push(a.scene.clone());
    m.seed = Some(scene.seed);
    if a.csi.is_some() || a.report.is_some() {
        let csi = synth_csi_for_modem(&scene, &s.modem)?;
        if let Some(path) = &a.csi {
            save_csi(path, &csi, serde_json::to_value(&m.config)?)
                .with_context(|| format!("writing {}", path.display()))?;
            m.outputs.push(path.clone());
            println!("{} CSI frames at {} Hz to {}", csi.n_frames(), csi.csi_rate(), path.display());
        }
        if let Some(path) = &a.report {
            let dev = acf_report(&csi, &scene, &s, path)?;
            m.outputs.push(path.clone());
            println!("max |ACF - model| up to the first peak: {dev:.4}");
        }
    }
    if let Some(path) = &a.wav {
        let cfg = &s.modem;
        let frames = ((scene.duration * cfg.sample_rate()) as usize / cfg.frame_length).max(1);
        let tx = generate_tx(cfg, frames)?;
        let sim = synth_waveform(&scene, &tx)?;
        m.warnings.clipped_samples = sim.clipped;
        if sim.clipped > 0 {
            m.warn(format!("{} samples clipped", sim.clipped));
        }
        write_wav(path, &sim.recording).with_context(|| format!("writing {}", path.display()))?;
        m.outputs.push(path.clone());
        println!("{} samples to {}", sim.recording.pcm.len(), path.display());
    }
    m.finish()
}

/// Empirical ACF of the whole series, aligned and averaged over
/// subcarriers, against the correlation model of the scene's geometry.
/// Returns the largest deviation up to the model's first peak.
fn acf_report(csi: &acspeed::CsiSeries, scene: &SimScene, s: &Settings, path: &Path) -> Result<f64> {
    let v =
        scene.speed.constant_on(0.0, scene.duration).filter(|&v| v > 0.0).ok_or_else(|| {
            Error::InvalidParameter("the ACF report needs a constant positive speed".into())
        })?;
    let kind = match scene.geometry {
        Geometry::Planar => ModelKind::Planar2D,
        Geometry::Spherical => ModelKind::Spherical3D,
    };
    let model = DiffusionModel::with_sound_speed(kind, s.estimator.sound_speed);
    let f_ref = s.estimator.reference_frequency(csi.subcarrier_frequencies());
    let k = model.wavenumber(f_ref);
    let peak = reference_point(kind) / (k * v);
    let f_min = csi.subcarrier_frequencies().iter().copied().fold(f64::INFINITY, f64::min);
    let max_lag = ((2.0 * peak * csi.csi_rate() * f_ref / f_min).ceil() as usize + 2).min(csi.n_frames() - 1);
    let power = channel_power(csi, Window { start: 0, len: csi.n_frames() })?;
    let aligned = align_frequency(&compute_acf(&power, max_lag)?, f_ref, s.estimator.oversample)?;
    let row =
        aligned.mean_row().ok_or_else(|| Error::InvalidParameter("no subcarrier has a usable ACF".into()))?;
    let mut out = create(path)?;
    writeln!(out, "# lag_s [s], empirical ACF and {kind} model correlation [unitless]")?;
    writeln!(out, "lag_s,empirical,model")?;
    let mut dev: f64 = 0.0;
    for (j, r) in row.iter().enumerate() {
        let tau = aligned.lag(j);
        let want = kind.correlation(k * v * tau);
        writeln!(out, "{tau},{r},{want}")?;
        if tau <= peak {
            dev = dev.max((r - want).abs());
        }
    }
    out.flush()?;
    Ok(dev)
}

pub fn eval(run: &Run, a: &EvalArgs) -> Result<()> {
    let s = run.settings(None, Some(&a.estimator))?;
    s.estimator.validate()?;
    let suite = run.suite(&a.suite)?;
    let mut m = run.manifest("eval", Snapshot { suite: Some(suite.clone()), ..snapshot(&s) });
    m.inputs.push(a.suite.clone());
    let mut out = create(&a.out)?;
    let summary = suite.run(&s.modem, &s.estimator, &mut out)?;
    out.flush()?;
    m.outputs.push(a.out.clone());
    print!("{summary}");
    m.finish()
}

pub fn seq(run: &Run, a: &SeqArgs) -> Result<()> {
    let seq = generate_kasami(a.degree, a.index)?;
    let mut out = create(&a.out)?;
    seq.write_csv(&mut out)?;
    out.flush()?;
    let mut m = run.manifest("seq", Snapshot::default());
    m.outputs.push(a.out.clone());
    println!("{} chips to {}", seq.len(), a.out.display());
    m.finish()
}

pub fn curves(run: &Run, a: &CurvesArgs) -> Result<()> {
    if a.points < 2 || !(a.max_lag > 0.0) || !(a.speed > 0.0) || !(a.frequency > 0.0) {
        return Err(Error::InvalidParameter(
            "need at least 2 points and positive lag, speed and frequency".into(),
        )
        .into());
    }
    let s = run.settings(None, None)?;
    let k = DiffusionModel::with_sound_speed(ModelKind::Spherical3D, s.estimator.sound_speed)
        .wavenumber(a.frequency);
    let mut out = create(&a.out)?;
    writeln!(
        out,
        "# tau_s [s], x = k v tau [rad], planar and spherical diffuse-field correlation [unitless]; v = {} m/s, f = {} Hz",
        a.speed, a.frequency
    )?;
    writeln!(out, "tau_s,x,planar_2d,spherical_3d")?;
    for i in 0..a.points {
        let tau = a.max_lag * i as f64 / (a.points - 1) as f64;
        let x = k * a.speed * tau;
        writeln!(
            out,
            "{tau},{x},{},{}",
            ModelKind::Planar2D.correlation(x),
            ModelKind::Spherical3D.correlation(x)
        )?;
    }
    out.flush()?;
    let mut m = run.manifest("curves", snapshot(&s));
    m.outputs.push(a.out.clone());
    m.finish()
}
