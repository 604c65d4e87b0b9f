use std::path::PathBuf;

use acspeed::ModelKind;
use clap::{Args, Parser, Subcommand};

/// Acoustic channel sounding and device-free speed estimation.
///
/// Settings resolve as: command-line flags, then ACSPEED_* environment
/// variables, then the TOML file given by --config, then built-in defaults.
#[derive(Debug, Parser)]
#[command(name = "acspeed", version)]
pub struct Cli {
    /// TOML file with optional [modem] and [estimator] tables.
    #[arg(long, global = true, env = "ACSPEED_CONFIG")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the two-branch probe waveform as a WAV file.
    GenTx(GenTxArgs),
    /// Decode a recording into a CSI series file.
    Decode(DecodeArgs),
    /// Estimate speeds from a CSI series file.
    Estimate(EstimateArgs),
    /// Synthesize CSI and/or a recording from a scene file.
    Simulate(SimulateArgs),
    /// Run an evaluation suite and write a report.
    Eval(EvalArgs),
    /// Export a Kasami sequence as CSV.
    Seq(SeqArgs),
    /// Export the diffuse-field correlation curves as CSV.
    Curves(CurvesArgs),
    /// Re-run the command recorded in a manifest with its recorded settings.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModemArgs {
    /// Audio sample rate in Hz.
    #[arg(long, env = "ACSPEED_SAMPLE_RATE")]
    pub sample_rate: Option<u32>,
    /// Samples per probe frame (power of two).
    #[arg(long, env = "ACSPEED_FRAME_LENGTH")]
    pub frame_length: Option<usize>,
    /// Carrier frequency in Hz.
    #[arg(long, env = "ACSPEED_CARRIER")]
    pub carrier: Option<f64>,
    /// Transmit amplitude before PCM coding.
    #[arg(long, env = "ACSPEED_AMPLITUDE")]
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EstimatorArgs {
    /// Analysis window in seconds.
    #[arg(long, env = "ACSPEED_WINDOW")]
    pub window: Option<f64>,
    /// Hop between windows in seconds.
    #[arg(long, env = "ACSPEED_STEP")]
    pub step: Option<f64>,
    /// Largest ACF lag in seconds.
    #[arg(long, env = "ACSPEED_MAX_LAG")]
    pub max_lag: Option<f64>,
    /// Correlation model: 2d (planar) or 3d (spherical).
    #[arg(long, env = "ACSPEED_MODEL")]
    pub model: Option<ModelKind>,
    /// Reference frequency for lag alignment in Hz.
    #[arg(long, env = "ACSPEED_F_REF")]
    pub f_ref: Option<f64>,
    /// Motion when the zero-crossing count exceeds this.
    #[arg(long, env = "ACSPEED_ZCC_THRESHOLD")]
    pub zcc_threshold: Option<f64>,
    /// Minimum prominence of the first peak.
    #[arg(long, env = "ACSPEED_MIN_PROMINENCE")]
    pub min_prominence: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenTxArgs {
    /// Output WAV path.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Length in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub duration: f64,
    #[command(flatten)]
    pub modem: ModemArgs,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Recording to decode (mono PCM WAV).
    pub input: PathBuf,
    /// Output CSI series path.
    #[arg(short, long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub modem: ModemArgs,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSI series file.
    pub input: PathBuf,
    /// Output speed CSV.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Also write the estimates as JSON lines.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Also write the Doppler baseline per window as CSV.
    #[arg(long)]
    pub dfs: Option<PathBuf>,
    /// Dump every window's ACF matrix as CSV into this directory.
    #[arg(long)]
    pub acf_dir: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("outputs").required(true).multiple(true))]
pub struct SimulateArgs {
    /// Scene file (TOML).
    pub scene: PathBuf,
    /// Write synthesized CSI here.
    #[arg(long, group = "outputs")]
    pub csi: Option<PathBuf>,
    /// Render the probe through the scene and write the capture here.
    #[arg(long, group = "outputs")]
    pub wav: Option<PathBuf>,
    /// Write the empirical ACF against the scene's model here (constant
    /// speed only).
    #[arg(long, group = "outputs")]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub modem: ModemArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Suite file (TOML).
    pub suite: PathBuf,
    /// Output report CSV.
    #[arg(short, long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Args)]
pub struct SeqArgs {
    /// Output CSV path.
    #[arg(short, long)]
    pub out: PathBuf,
    /// LFSR degree (even, 4 to 16).
    #[arg(long, default_value_t = 6)]
    pub degree: u32,
    /// Member of the small set.
    #[arg(long, default_value_t = 0)]
    pub index: u32,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Output CSV path.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Target speed in m/s.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    /// Subcarrier frequency in Hz.
    #[arg(long, default_value_t = 20_250.0)]
    pub frequency: f64,
    /// Largest lag in seconds.
    #[arg(long, default_value_t = 0.05)]
    pub max_lag: f64,
    /// Number of lag points.
    #[arg(long, default_value_t = 501)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// Manifest written beside an earlier output.
    pub manifest: PathBuf,
}
