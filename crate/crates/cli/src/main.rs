//! `acspeed`: generate probes, decode recordings, simulate scenes, estimate
//! speeds and run evaluation suites.
//!
//! Exit status: 0 success, 1 other failure, 2 usage, 3 invalid configuration
//! or parameter, 4 I/O or unreadable input file, 5 schema (scene, suite,
//! config or manifest file does not match its format).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod eval;
mod manifest;
mod settings;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command};
use commands::Run;
use manifest::RunManifest;

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<acspeed::Error>() {
            return match err {
                acspeed::Error::InvalidParameter(_) => 3,
                acspeed::Error::Io(_) | acspeed::Error::Format(_) => 4,
                acspeed::Error::Schema(_) => 5,
                acspeed::Error::NoPeak(_) => 1,
            };
        }
        if cause.is::<std::io::Error>() {
            return 4;
        }
        if cause.is::<toml::de::Error>() || cause.is::<serde_json::Error>() {
            return 5;
        }
    }
    1
}

fn dispatch(run: &Run, command: &Command) -> Result<()> {
    match command {
        Command::GenTx(a) => commands::gen_tx(run, a),
        Command::Decode(a) => commands::decode(run, a),
        Command::Estimate(a) => commands::estimate(run, a),
        Command::Simulate(a) => commands::simulate(run, a),
        Command::Eval(a) => commands::eval(run, a),
        Command::Seq(a) => commands::seq(run, a),
        Command::Curves(a) => commands::curves(run, a),
        Command::Rerun(a) => {
            let m = RunManifest::load(&a.manifest)?;
            let argv = std::iter::once("acspeed".to_string()).chain(m.args.iter().cloned());
            let cli = Cli::try_parse_from(argv)
                .map_err(|e| acspeed::Error::Schema(format!("recorded arguments: {e}")))?;
            if matches!(cli.command, Command::Rerun(_)) {
                return Err(acspeed::Error::Schema("a manifest cannot re-run a re-run".into()).into());
            }
            let inner = Run { config_path: None, args: m.args.clone(), fixed: Some(m.config) };
            dispatch(&inner, &cli.command)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = Run { config_path: cli.config.clone(), args: std::env::args().skip(1).collect(), fixed: None };
    match dispatch(&run, &cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
