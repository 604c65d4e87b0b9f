use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acspeed::io::{load_csi, read_wav};
use serde_json::Value;
use tempfile::TempDir;

fn acspeed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acspeed"))
        .args(args)
        .current_dir(dir)
        .env_remove("ACSPEED_CONFIG")
        .env_remove("ACSPEED_WINDOW")
        .env_remove("ACSPEED_STEP")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = acspeed(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = acspeed(dir, args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn manifest(path: &Path) -> Value {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    serde_json::from_str(&std::fs::read_to_string(PathBuf::from(name)).unwrap()).unwrap()
}

fn scene_file(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const MOVING: &str =
    "num_scatterers = 1000\ngeometry = \"spherical\"\nspeed = 1.0\nsnr_db = 20\nseed = 2\nduration = 6\n";
const STILL: &str =
    "num_scatterers = 0\ngeometry = \"spherical\"\nspeed = 0.0\nsnr_db = 10\nseed = 3\nduration = 4\n";

/// Speeds column of a speed CSV.
fn speeds(csv: &Path) -> Vec<(bool, Option<f64>, String)> {
    std::fs::read_to_string(csv)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1] == "true", f[2].parse().ok(), f[6].to_string())
        })
        .collect()
}

#[test]
fn gen_tx_writes_the_requested_length() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen-tx", "-o", "tx.wav"]);
    let wav = read_wav(dir.path().join("tx.wav")).unwrap();
    assert_eq!(wav.recording.pcm.len(), 60 * 48_000);
    assert_eq!(wav.recording.sample_rate, 48_000);
    let m = manifest(&dir.path().join("tx.wav"));
    assert_eq!(m["command"], "gen-tx");
    assert_eq!(m["warnings"]["clipped_samples"], 0);
    assert!(m["tool_version"].is_string());
    assert_eq!(m["config"]["settings"]["modem"]["frame_length"], 512);
}

#[test]
fn zero_amplitude_is_silent_and_bad_frames_are_config_errors() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen-tx", "-o", "quiet.wav", "--duration", "1", "--amplitude", "0"]);
    let wav = read_wav(dir.path().join("quiet.wav")).unwrap();
    assert!(wav.recording.pcm.iter().all(|&v| v == 0));
    let (c, err) = code(dir.path(), &["gen-tx", "-o", "x.wav", "--frame-length", "511"]);
    assert_eq!(c, 3, "{err}");
    assert!(err.contains("power of two"));
}

#[test]
fn decode_loopback_and_failures() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["gen-tx", "-o", "tx.wav", "--duration", "2"]);
    ok(d, &["decode", "tx.wav", "-o", "tx.csi"]);
    let (csi, _) = load_csi(d.join("tx.csi")).unwrap();
    assert_eq!(csi.csi_rate(), 187.5);
    assert!(csi.n_frames() >= 370);
    assert_eq!(manifest(&d.join("tx.csi"))["warnings"]["truncated_inputs"], 0);

    // a cut file still decodes, with the truncation recorded
    let bytes = std::fs::read(d.join("tx.wav")).unwrap();
    std::fs::write(d.join("cut.wav"), &bytes[..bytes.len() / 2 + 1]).unwrap();
    ok(d, &["decode", "cut.wav", "-o", "cut.csi"]);
    let m = manifest(&d.join("cut.csi"));
    assert_eq!(m["warnings"]["truncated_inputs"], 1);
    assert!(load_csi(d.join("cut.csi")).unwrap().0.n_frames() < csi.n_frames());

    ok(d, &["gen-tx", "-o", "other.wav", "--duration", "1", "--sample-rate", "44100", "--carrier", "18000"]);
    let (c, err) = code(d, &["decode", "other.wav", "-o", "other.csi"]);
    assert_eq!(c, 3, "{err}");
    let (c, _) = code(d, &["decode", "missing.wav", "-o", "x.csi"]);
    assert_eq!(c, 4);
}

#[test]
fn simulate_then_estimate() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    scene_file(d, "moving.toml", MOVING);
    ok(d, &["simulate", "moving.toml", "--csi", "moving.csi"]);
    assert_eq!(manifest(&d.join("moving.csi"))["seed"], 2);
    for model in ["3d", "2d"] {
        let out = format!("speed_{model}.csv");
        ok(d, &["estimate", "moving.csi", "-o", &out, "--model", model, "--json", "speed.jsonl"]);
        let rows = speeds(&d.join(&out));
        assert_eq!(rows.len(), 51);
        assert!(rows.iter().all(|r| r.2 == model));
        if model == "3d" {
            let v: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
            assert!(v.len() >= 45);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            assert!((mean - 1.0).abs() < 0.1, "mean {mean}");
        }
    }
    let json = std::fs::read_to_string(d.join("speed.jsonl")).unwrap();
    assert_eq!(json.lines().count(), 51);

    scene_file(d, "still.toml", STILL);
    ok(d, &["simulate", "still.toml", "--csi", "still.csi"]);
    ok(d, &["estimate", "still.csi", "-o", "still.csv", "--dfs", "still_dfs.csv", "--acf-dir", "acf"]);
    let rows = speeds(&d.join("still.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| !r.0 && r.1.is_none()));
    assert_eq!(std::fs::read_dir(d.join("acf")).unwrap().count(), rows.len());
    assert!(d.join("still_dfs.csv").exists());
}

#[test]
fn simulation_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    scene_file(d, "s.toml", &MOVING.replace("duration = 6", "duration = 1"));
    ok(d, &["simulate", "s.toml", "--csi", "a.csi", "--wav", "a.wav"]);
    ok(d, &["simulate", "s.toml", "--csi", "b.csi", "--wav", "b.wav"]);
    assert_eq!(std::fs::read(d.join("a.csi")).unwrap(), std::fs::read(d.join("b.csi")).unwrap());
    assert_eq!(std::fs::read(d.join("a.wav")).unwrap(), std::fs::read(d.join("b.wav")).unwrap());

    // re-running from the manifest rewrites identical bytes, even after the
    // scene file has changed
    let before = std::fs::read(d.join("a.wav")).unwrap();
    std::fs::write(d.join("s.toml"), MOVING.replace("seed = 2", "seed = 8")).unwrap();
    ok(d, &["rerun", "a.wav.manifest.json"]);
    assert_eq!(std::fs::read(d.join("a.wav")).unwrap(), before);
}

#[test]
fn scene_schema_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    scene_file(d, "bad.toml", &MOVING.replace("seed = 2\n", ""));
    let (c, err) = code(d, &["simulate", "bad.toml", "--csi", "x.csi"]);
    assert_eq!(c, 5, "{err}");
    assert!(err.contains("seed"), "{err}");
    let (c, _) = code(d, &["simulate", "bad.toml"]);
    assert_eq!(c, 2);
}

#[test]
fn oracle_report_tracks_the_model() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    scene_file(d, "big.toml", &MOVING.replace("duration = 6", "duration = 10"));
    let out = ok(d, &["simulate", "big.toml", "--report", "acf.csv"]);
    let dev: f64 = out.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(dev < 0.1, "{out}");
    let text = std::fs::read_to_string(d.join("acf.csv")).unwrap();
    assert!(text.starts_with('#'));
    assert_eq!(text.lines().nth(1), Some("lag_s,empirical,model"));
}

#[test]
fn eval_suites() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    scene_file(
        d,
        "sweep.toml",
        "kind = \"rate-sweep\"\nspeeds = [0.8]\nseeds = [1]\nnum_scatterers = 200\nduration = 4\n",
    );
    ok(d, &["eval", "sweep.toml", "-o", "sweep.csv"]);
    let text = std::fs::read_to_string(d.join("sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(2).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][1], rows[1][1]), (187.5, 93.75));
    assert!(rows[0][2] < rows[1][2], "full rate should beat half rate: {text}");

    let contrast = r#"
kind = "dfs-vs-ase"
[[scenes]]
name = "radial"
scene = { num_scatterers = 200, geometry = "spherical", directions = "radial", speed = 0.3, snr_db = 20, seed = 1, duration = 4 }
[[scenes]]
name = "diffuse"
scene = { num_scatterers = 1000, geometry = "spherical", speed = 1.0, snr_db = 20, seed = 21, duration = 4 }
"#;
    scene_file(d, "contrast.toml", contrast);
    ok(d, &["eval", "contrast.toml", "-o", "contrast.csv"]);
    let text = std::fs::read_to_string(d.join("contrast.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(2).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    let dfs_radial: f64 = rows[0][2].parse().unwrap();
    let dfs_diffuse: f64 = rows[1][2].parse().unwrap();
    let ase_diffuse: f64 = rows[1][4].parse().unwrap();
    assert!((dfs_radial - 0.3).abs() < 0.045);
    assert!(dfs_diffuse.abs() < 0.1);
    assert!((ase_diffuse - 1.0).abs() < 0.1);

    scene_file(d, "empty.toml", "kind = \"dfs-vs-ase\"\nscenes = []\n");
    let (c, err) = code(d, &["eval", "empty.toml", "-o", "e.csv"]);
    assert_eq!(c, 3, "{err}");
}

#[test]
fn sequence_and_curve_exports() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["seq", "-o", "chips.csv", "--index", "1"]);
    let text = std::fs::read_to_string(d.join("chips.csv")).unwrap();
    assert_eq!(text.lines().count(), 65);
    ok(d, &["curves", "-o", "curves.csv", "--points", "11"]);
    let text = std::fs::read_to_string(d.join("curves.csv")).unwrap();
    assert_eq!(text.lines().nth(1), Some("tau_s,x,planar_2d,spherical_3d"));
    assert_eq!(text.lines().count(), 13);
    assert_eq!(text.lines().nth(2), Some("0,0,1,1"));
    let (c, _) = code(d, &["seq", "-o", "x.csv", "--degree", "5"]);
    assert_eq!(c, 3);
}

#[test]
fn flags_beat_env_beat_file() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    scene_file(d, "still.toml", STILL);
    ok(d, &["simulate", "still.toml", "--csi", "still.csi"]);
    std::fs::write(d.join("cfg.toml"), "[estimator]\nwindow = 2.0\nstep = 0.5\nmax_lag = 0.8\n").unwrap();
    let run = |extra_env: Option<&str>, extra: &[&str]| -> Value {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_acspeed"));
        cmd.current_dir(d).env_remove("ACSPEED_WINDOW").env_remove("ACSPEED_STEP");
        cmd.args(["--config", "cfg.toml", "estimate", "still.csi", "-o", "p.csv"]).args(extra);
        if let Some(step) = extra_env {
            cmd.env("ACSPEED_STEP", step);
        }
        assert!(cmd.status().unwrap().success());
        manifest(&d.join("p.csv"))["config"]["settings"]["estimator"].clone()
    };
    let e = run(None, &[]);
    assert_eq!((e["window"].as_f64(), e["step"].as_f64()), (Some(2.0), Some(0.5)));
    let e = run(Some("0.25"), &[]);
    assert_eq!(e["step"].as_f64(), Some(0.25));
    let e = run(Some("0.25"), &["--step", "1.0"]);
    assert_eq!((e["window"].as_f64(), e["step"].as_f64()), (Some(2.0), Some(1.0)));

    std::fs::write(d.join("broken.toml"), "[estimator]\nwindoww = 1\n").unwrap();
    let (c, _) = code(d, &["--config", "broken.toml", "estimate", "still.csi", "-o", "p.csv"]);
    assert_eq!(c, 5);
}
