//! `landmark` command-line tool: capture landmarks from scene files, search
//! for them, run synthetic benchmarks, and serve the HTTP API used by the
//! capture UI.

pub mod commands;
pub mod report;
pub mod server;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use landmark_core::io::BoxSpec;

#[derive(Debug, Parser)]
#[command(name = "landmark", version, about = "Capture and localize custom point-cloud landmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crop a scene to a box and save the result as a landmark file.
    Capture {
        #[arg(long)]
        scene: PathBuf,
        /// cx,cy,cz,sx,sy,sz with an optional qw,qx,qy,qz orientation.
        #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
        bbox: BoxSpec,
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search a scene for one or more landmarks.
    Find {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long = "landmark", required = true, num_args = 1..)]
        landmarks: Vec<PathBuf>,
        /// Parameter file; missing keys keep their defaults.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Overrides the seed from the parameter file.
        #[arg(long)]
        seed: Option<u64>,
        /// Report destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Run a synthetic benchmark suite and write precision/recall reports.
    Eval {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
        /// JSON report path; a text table is written next to it with a .txt extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the built-in demo benchmark suite as JSON.
    DemoSuite {
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API for a scene.
    Serve {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        landmark_dir: PathBuf,
    },
}

/// Parses `cx,cy,cz,sx,sy,sz[,qw,qx,qy,qz]`.
pub fn parse_box(text: &str) -> Result<BoxSpec, String> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", v.trim())))
        .collect::<Result<Vec<_>, _>>()?;
    let orientation = match values.len() {
        6 => [1.0, 0.0, 0.0, 0.0],
        10 => [values[6], values[7], values[8], values[9]],
        n => return Err(format!("expected 6 or 10 comma-separated numbers, got {n}")),
    };
    let spec = BoxSpec {
        center: [values[0], values[1], values[2]],
        size: [values[3], values[4], values[5]],
        orientation,
    };
    spec.to_box().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Parses arguments and runs the command. Usage errors exit with 2, data and
/// I/O errors with 1.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
