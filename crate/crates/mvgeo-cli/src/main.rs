//! `mvgeo` — synthetic-scene rendering, depth/pose optimization, frame
//! tracking and evaluation from one binary.
//!
//! Every subcommand accepts an optional `--config FILE` with `key = value`
//! lines (`#` comments); command-line flags override file values, and unknown
//! file keys are rejected. The fully resolved configuration is echoed to
//! stderr unless `MVGEO_LOG=quiet`. The environment variable changes log
//! verbosity only, never behavior or outputs.
//!
//! Exit codes: 0 success, 1 usage or configuration errors, 2 malformed or
//! inconsistent input data, 3 numerical failures (divergence, lost tracking).

mod data;
mod eval_consistency;
mod eval_depth;
mod eval_odom;
mod export_cloud;
mod logging;
mod params;
mod report;
mod synth;
mod track;
mod train;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use mvgeo::Error;

#[derive(Parser)]
#[command(name = "mvgeo", version, about = "Dense depth & camera-motion toolbox", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic image/depth/pose sequence into a dataset directory.
    Synth(synth::Args),
    /// Optimize per-frame depth (and optionally poses) on a dataset snippet.
    Train(train::Args),
    /// Track camera motion frame-to-frame and write the trajectory.
    Track(track::Args),
    /// Compare a predicted depth map against ground truth.
    EvalDepth(eval_depth::Args),
    /// Compare a predicted trajectory against ground truth.
    EvalOdom(eval_odom::Args),
    /// Measure geometric agreement between two depth maps as point clouds.
    EvalConsistency(eval_consistency::Args),
    /// Convert a depth map (plus optional image colors) into a PLY cloud.
    ExportCloud(export_cloud::Args),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are successful outcomes; everything else is
            // a usage error.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };

    let result = match cli.command {
        Command::Synth(args) => synth::run(args),
        Command::Train(args) => train::run(args),
        Command::Track(args) => track::run(args),
        Command::EvalDepth(args) => eval_depth::run(args),
        Command::EvalOdom(args) => eval_odom::run(args),
        Command::EvalConsistency(args) => eval_consistency::run(args),
        Command::ExportCloud(args) => export_cloud::run(args),
    };

    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

/// Maps error categories onto process exit codes.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        Error::Data(_) | Error::Parse { .. } | Error::NoOverlap(_) | Error::FullyMasked(_) | Error::Io(_) => 2,
        Error::Domain(_) | Error::Divergence { .. } | Error::TrackingLost { .. } => 3,
    }
}
