//! File formats: WAV recordings, the CSI container, and CSV / JSON-lines
//! outputs.
//!
//! # CSI container
//!
//! All integers and floats are little-endian.
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `CSIS` |
//! | 4 | version, `u32` = 1 |
//! | 8 | header length `L`, `u64` |
//! | L | UTF-8 JSON header, see [`CsiHeader`] |
//! | 8·T | timestamps, `f64` seconds |
//! | 16·T·S | frames row-major (time, subcarrier), each `re, im` as `f64` |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csi::CsiSeries;
use crate::error::{Error, Result};
use crate::estimator::{AcfMatrix, DfsEstimate, SpeedEstimate};
use crate::modem::Recording;

const MAGIC: &[u8; 4] = b"CSIS";
const VERSION: u32 = 1;

fn wav_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(e) => Error::Io(e),
        other => Error::Format(other.to_string()),
    }
}

/// Writes mono integer PCM.
pub fn write_wav(path: impl AsRef<Path>, rec: &Recording) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rec.sample_rate,
        bits_per_sample: rec.pcm_bits,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_error)?;
    for &s in &rec.pcm {
        w.write_sample(s).map_err(wav_error)?;
    }
    w.finalize().map_err(wav_error)
}

/// A recording read from disk.
#[derive(Debug, Clone)]
pub struct WavInput {
    pub recording: Recording,
    /// The data chunk ended before its declared length.
    pub truncated: bool,
}

/// Reads mono integer PCM. A file cut short yields the samples present and
/// `truncated = true`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<WavInput> {
    let mut r = hound::WavReader::open(path).map_err(wav_error)?;
    let spec = r.spec();
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::Format("only integer PCM is supported".into()));
    }
    if spec.channels != 1 {
        return Err(Error::Format(format!("expected mono, found {} channels", spec.channels)));
    }
    let mut pcm = Vec::with_capacity(r.len() as usize);
    let mut truncated = false;
    for s in r.samples::<i32>() {
        match s {
            Ok(v) => pcm.push(v),
            // the header was valid, so a read failure here means the data ran out
            Err(hound::Error::IoError(_)) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(wav_error(e)),
        }
    }
    Ok(WavInput {
        recording: Recording { pcm, sample_rate: spec.sample_rate, pcm_bits: spec.bits_per_sample },
        truncated,
    })
}

/// JSON header of the CSI container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiHeader {
    pub csi_rate: f64,
    pub n_frames: usize,
    pub subcarrier_frequencies: Vec<f64>,
    /// Free-form snapshot of the configuration that produced the series.
    #[serde(default)]
    pub config: serde_json::Value,
}

pub fn write_csi<W: Write>(mut out: W, csi: &CsiSeries, config: serde_json::Value) -> Result<()> {
    let header = CsiHeader {
        csi_rate: csi.csi_rate(),
        n_frames: csi.n_frames(),
        subcarrier_frequencies: csi.subcarrier_frequencies().to_vec(),
        config,
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    for t in csi.timestamps() {
        out.write_all(&t.to_le_bytes())?;
    }
    for h in csi.frames().iter() {
        out.write_all(&h.re.to_le_bytes())?;
        out.write_all(&h.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_csi<R: Read>(mut input: R) -> Result<(CsiSeries, CsiHeader)> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a CSI container".into()));
    }
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let len = u64::from_le_bytes(b8) as usize;
    let mut json = vec![0u8; len];
    input.read_exact(&mut json)?;
    let header: CsiHeader = serde_json::from_slice(&json).map_err(|e| Error::Schema(e.to_string()))?;
    let (n, s) = (header.n_frames, header.subcarrier_frequencies.len());
    let timestamps = (0..n).map(|_| read_f64(&mut input)).collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(n * s);
    for _ in 0..n * s {
        let re = read_f64(&mut input)?;
        values.push(Complex64::new(re, read_f64(&mut input)?));
    }
    let frames = Array2::from_shape_vec((n, s), values).map_err(|e| Error::Format(e.to_string()))?;
    let csi = CsiSeries::new(frames, header.csi_rate, header.subcarrier_frequencies.clone(), timestamps)?;
    Ok((csi, header))
}

pub fn save_csi(path: impl AsRef<Path>, csi: &CsiSeries, config: serde_json::Value) -> Result<()> {
    write_csi(BufWriter::new(File::create(path)?), csi, config)
}

pub fn load_csi(path: impl AsRef<Path>) -> Result<(CsiSeries, CsiHeader)> {
    read_csi(BufReader::new(File::open(path)?))
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

pub fn write_speed_csv<W: Write>(mut out: W, rows: &[SpeedEstimate]) -> Result<()> {
    writeln!(
        out,
        "# time_s [s], motion [bool], speed_mps [m/s], tau_s [s], confidence [prominence], zcc [count], model"
    )?;
    writeln!(out, "time_s,motion,speed_mps,tau_s,confidence,zcc,model")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.time,
            r.motion,
            opt(r.speed),
            opt(r.tau_s),
            r.confidence,
            r.zcc,
            r.model_kind.as_str()
        )?;
    }
    Ok(())
}

/// One JSON object per line.
pub fn write_json_lines<W: Write, T: Serialize>(mut out: W, rows: &[T]) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_dfs_csv<W: Write>(mut out: W, rows: &[DfsEstimate]) -> Result<()> {
    writeln!(out, "# time_s [s], radial_speed_mps [m/s], voting_fraction [0-1], aliased [bool]")?;
    writeln!(out, "time_s,radial_speed_mps,voting_fraction,aliased")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.time, r.radial_speed, r.voting_fraction, r.aliased)?;
    }
    Ok(())
}

/// ACF matrix as lag × subcarrier; invalid rows are left empty.
pub fn write_acf_csv<W: Write>(mut out: W, acf: &AcfMatrix) -> Result<()> {
    writeln!(out, "# lag_s [s], then ACF [unitless] per subcarrier [Hz]")?;
    write!(out, "lag_s")?;
    for f in &acf.subcarrier_frequencies {
        write!(out, ",{f}")?;
    }
    writeln!(out)?;
    for l in 0..acf.n_lags() {
        write!(out, "{}", acf.lag(l))?;
        for r in 0..acf.n_rows() {
            if acf.valid[r] {
                write!(out, ",{}", acf.values[[r, l]])?;
            } else {
                write!(out, ",")?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series() -> CsiSeries {
        let frames = Array2::from_shape_fn((5, 3), |(t, s)| Complex64::new(t as f64, -(s as f64) / 3.0));
        CsiSeries::uniform(frames, 187.5, vec![1.0, 2.0, 3.0], 0.25).unwrap()
    }

    #[test]
    fn csi_container_round_trip() {
        let csi = series();
        let mut buf = Vec::new();
        write_csi(&mut buf, &csi, serde_json::json!({"carrier": 20250.0})).unwrap();
        let (back, header) = read_csi(buf.as_slice()).unwrap();
        assert_eq!(back, csi);
        assert_eq!(header.config["carrier"], 20250.0);
        assert_eq!(buf.len(), 16 + (buf.len() - 16 - 5 * 8 - 15 * 16) + 5 * 8 + 15 * 16);
    }

    #[test]
    fn bad_magic_and_short_body() {
        assert!(matches!(read_csi(&b"WAVE0000"[..]), Err(Error::Format(_))));
        let mut buf = Vec::new();
        write_csi(&mut buf, &series(), serde_json::Value::Null).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_csi(buf.as_slice()), Err(Error::Io(_))));
    }

    #[test]
    fn wav_round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let rec = Recording {
            pcm: (0..1000).map(|i| (i * 37 % 2001) - 1000).collect(),
            sample_rate: 48000,
            pcm_bits: 16,
        };
        write_wav(&path, &rec).unwrap();
        let back = read_wav(&path).unwrap();
        assert!(!back.truncated);
        assert_eq!(back.recording, rec);

        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 501]).unwrap();
        let cut = read_wav(&path).unwrap();
        assert!(cut.truncated);
        assert_eq!(cut.recording.pcm, rec.pcm[..cut.recording.pcm.len()]);
        assert!(cut.recording.pcm.len() < 1000);
    }

    #[test]
    fn speed_csv_has_units_and_blanks() {
        let rows = vec![SpeedEstimate {
            time: 0.5,
            speed: None,
            motion: false,
            tau_s: None,
            confidence: 0.0,
            model_kind: crate::ModelKind::Spherical3D,
            zcc: 1,
        }];
        let mut out = Vec::new();
        write_speed_csv(&mut out, &rows).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert!(lines[0].starts_with('#'));
        assert_eq!(lines[2], "0.5,false,,,0,1,3d");
    }
}
