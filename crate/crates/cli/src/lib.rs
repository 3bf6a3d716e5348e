//! Command-line front end: reads spec files, runs the analyses of the
//! `crnash` library and renders reports as canonical JSON, CSV and a short
//! human summary.

mod commands;
pub mod json;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use commands::run;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "crnash",
    version,
    about = "Analyze codimension-two CR submanifolds and their Nash blow-ups"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Seed for every random choice (ray directions, targets).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Override the on-surface residual tolerance of the spec.
    #[arg(long, global = true)]
    pub tol_surface: Option<f64>,
    /// Override the relative rank tolerance of the spec.
    #[arg(long, global = true)]
    pub tol_rank: Option<f64>,
    /// Write the JSON report here (`-` for stdout).
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Write plot data here (`-` for stdout).
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Print phase timings to stderr.
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a spec, locate complex jump points and certify transversality.
    Analyze { spec: PathBuf },
    /// Levi pair, Mizner polynomial and nondegeneracy at a point or over a jump.
    Levi {
        spec: PathBuf,
        /// Ambient point as comma-separated complex numbers (`0.1+0.2i,0,…`).
        #[arg(long, conflicts_with = "jump_index")]
        point: Option<String>,
        /// Index of a jump point as listed by `analyze`.
        #[arg(long)]
        jump_index: Option<usize>,
        /// Fiber point over a jump, colon-separated (`1:0`, `1:i`).
        #[arg(long)]
        fiber: Option<String>,
    },
    /// Blow-up fibers: curve fibers over singular points, or CR fiber samples
    /// with the linear model over each jump.
    Blowup {
        spec: PathBuf,
        /// Number of random rays per jump point.
        #[arg(long, default_value_t = 8)]
        rays: usize,
        /// Comma-separated, strictly decreasing parameter ladder.
        #[arg(long)]
        eps: Option<String>,
        /// Restrict to one jump point.
        #[arg(long)]
        jump_index: Option<usize>,
    },
    /// Exact obstruction class for complex tangent rank `n`.
    Chern {
        #[arg(long)]
        n: usize,
        /// Evaluate at `h,e1,e2` (rationals such as `1/2` allowed).
        #[arg(long)]
        eval: Option<String>,
    },
    /// Run the structural checks on a spec file.
    Validate { spec: PathBuf },
}

/// Failure classes, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<crnash::Error> for CliError {
    fn from(e: crnash::Error) -> Self {
        use crnash::Error as E;
        let msg = e.to_string();
        if e.is_numerical() {
            CliError::Numerical(msg)
        } else if matches!(e, E::Internal(_)) {
            CliError::Internal(msg)
        } else {
            CliError::Input(msg)
        }
    }
}

/// Everything a command produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// Canonical JSON report.
    pub report: String,
    /// Human-readable summary.
    pub summary: String,
    pub csv: Option<String>,
    /// Exit code for a completed run (nonzero for a failed validation).
    pub exit_code: i32,
}

#[derive(Debug, Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

/// Spec echo: hash and normalized text of the input file.
#[derive(Debug, Clone, Serialize)]
pub struct SpecEcho {
    pub kind: &'static str,
    pub sha256: String,
    pub normalized_text: String,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    schema_version: u32,
    tool: Tool,
    command: &'a str,
    spec: Option<&'a SpecEcho>,
    settings: Value,
    results: Value,
    diagnostics: Value,
}

pub(crate) fn render_report(
    command: &str,
    spec: Option<&SpecEcho>,
    settings: Value,
    results: Value,
    diagnostics: Value,
) -> String {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool: Tool {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        command,
        spec,
        settings,
        results,
        diagnostics,
    };
    let value = serde_json::to_value(&report).expect("report serializes");
    json::to_canonical_string(&value)
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Parse a complex number such as `0.5`, `-i`, `1-2i` or `3.5e-1+0.25i`.
pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let t = s.trim().replace(' ', "");
    let t = match t.as_str() {
        "i" | "+i" => "1i".to_string(),
        "-i" => "-1i".to_string(),
        _ => t.replace("+i", "+1i").replace("-i", "-1i"),
    };
    Complex64::from_str(&t).map_err(|_| CliError::Input(format!("cannot parse complex number {s:?}")))
}

pub fn parse_complex_list(s: &str, sep: char) -> Result<Vec<Complex64>, CliError> {
    s.split(sep).map(parse_complex).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("0.5").unwrap(), c(0.5, 0.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1-2i").unwrap(), c(1.0, -2.0));
        assert_eq!(parse_complex("1+i").unwrap(), c(1.0, 1.0));
        assert_eq!(parse_complex_list("1:i", ':').unwrap(), vec![c(1.0, 0.0), c(0.0, 1.0)]);
        assert!(parse_complex("1+").is_err());
    }

    #[test]
    fn exit_codes() {
        let parse = crnash::manifold::ManifoldSpec::new(0, &["z", "w"], "re(", "im(w)").unwrap_err();
        assert_eq!(CliError::from(parse).exit_code(), 2);
        assert_eq!(CliError::from(crnash::Error::NotTransverse).exit_code(), 3);
        assert_eq!(CliError::from(crnash::Error::Internal("x".into())).exit_code(), 4);
    }
}
