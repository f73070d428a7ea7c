//! Command-line frontend for `origami-entropy`.
//!
//! [`execute`] runs a parsed command and returns the rendered output and
//! exit code; the binary only does I/O around it.

pub mod commands;
pub mod config;
pub mod report;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{BaseSpec, Format, GridSpec, Precision, RunConfig, SurfaceSource};
pub use verify::{run_verify, CheckResult, VerifyOptions};

/// Exit code for bad input.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for solver or check failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<origami_entropy::Error> for CliError {
    fn from(e: origami_entropy::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "origami-entropy",
    version,
    about = "Entropy of square-tiled surfaces along the SL(2,R) orbit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Vertex data, genus and stratum of a surface.
    Info(Flags),
    /// Certified entropy enclosure at one orbit point.
    Entropy(Flags),
    /// Entropy over an (s, u) grid, as CSV.
    Scan(Flags),
    /// Finite-difference gradient and Hessian.
    Hessian(Flags),
    /// Compass search for the entropy minimum along the orbit.
    Minimize(Flags),
    /// Self-check suite.
    Verify(Flags),
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Info(f)
            | Command::Entropy(f)
            | Command::Scan(f)
            | Command::Hessian(f)
            | Command::Minimize(f)
            | Command::Verify(f) => f,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Info(_) => "info",
            Command::Entropy(_) => "entropy",
            Command::Scan(_) => "scan",
            Command::Hessian(_) => "hessian",
            Command::Minimize(_) => "minimize",
            Command::Verify(_) => "verify",
        }
    }
}

/// Flags shared by every subcommand. Values are validated when the
/// [`RunConfig`] is assembled.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Flat key=value file; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Family name (L, EW, O:3, St:4, G:3) or a surface file.
    #[arg(long)]
    pub surface: Option<String>,
    /// Family index for O, St and G.
    #[arg(long)]
    pub k: Option<String>,
    /// Number of squares of an inline surface.
    #[arg(long)]
    pub squares: Option<String>,
    /// Horizontal gluing in cycle notation.
    #[arg(long)]
    pub h: Option<String>,
    /// Vertical gluing in cycle notation.
    #[arg(long)]
    pub v: Option<String>,
    /// equilateral, identity or a,b,c,d.
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    /// lo:hi:n
    #[arg(long = "s-range", allow_hyphen_values = true)]
    pub s_range: Option<String>,
    /// lo:hi:n
    #[arg(long = "u-range", allow_hyphen_values = true)]
    pub u_range: Option<String>,
    /// Fixed truncation of the lattice sum.
    #[arg(long = "N", alias = "cutoff")]
    pub cutoff: Option<String>,
    /// Enclosure width goal when no N is given.
    #[arg(long)]
    pub width: Option<String>,
    /// Root tolerance of the bracketing solver.
    #[arg(long)]
    pub tol: Option<String>,
    /// json, csv or plain.
    #[arg(long)]
    pub format: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
    /// double or extended.
    #[arg(long)]
    pub precision: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// entropy or f (hessian).
    #[arg(long)]
    pub target: Option<String>,
    /// Exponent for the f target.
    #[arg(long)]
    pub t: Option<String>,
    /// orbit or length-angle (hessian).
    #[arg(long)]
    pub chart: Option<String>,
    /// Difference step (hessian) or initial step (minimize).
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long = "stop-tol")]
    pub stop_tol: Option<String>,
    /// Holonomy range traced by verify.
    #[arg(long = "max-coeff")]
    pub max_coeff: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let fields: [(&'static str, &Option<String>); 23] = [
            ("surface", &self.surface),
            ("k", &self.k),
            ("squares", &self.squares),
            ("h", &self.h),
            ("v", &self.v),
            ("base", &self.base),
            ("s", &self.s),
            ("u", &self.u),
            ("s-range", &self.s_range),
            ("u-range", &self.u_range),
            ("N", &self.cutoff),
            ("width", &self.width),
            ("tol", &self.tol),
            ("format", &self.format),
            ("out", &self.out),
            ("precision", &self.precision),
            ("seed", &self.seed),
            ("target", &self.target),
            ("t", &self.t),
            ("chart", &self.chart),
            ("step", &self.step),
            ("stop-tol", &self.stop_tol),
            ("max-coeff", &self.max_coeff),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }

    /// Config file entries first, then flags.
    pub fn to_config(&self) -> Result<RunConfig, CliError> {
        let file_pairs = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("cannot read config {}: {e}", path.display()))
                })?;
                config::parse_config_file(&text)?
            }
            None => Vec::new(),
        };
        let flag_pairs = self.pairs();
        let all = file_pairs
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .chain(flag_pairs);
        RunConfig::from_pairs(all)
    }
}

/// Rendered result of a command.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    /// Report body, already formatted.
    pub body: String,
    /// Diagnostics for stderr.
    pub notes: Vec<String>,
    pub exit_code: i32,
}

/// Runs `command` to completion; writing the output is left to the caller.
pub fn execute(command: &Command) -> Result<(RunConfig, Outcome), CliError> {
    let cfg = command.flags().to_config()?;
    let outcome = match command {
        Command::Info(_) => commands::info(&cfg)?,
        Command::Entropy(_) => commands::entropy(&cfg)?,
        Command::Scan(_) => commands::scan(&cfg)?,
        Command::Hessian(_) => commands::hessian(&cfg)?,
        Command::Minimize(_) => commands::minimize(&cfg)?,
        Command::Verify(_) => commands::verify(&cfg, &VerifyOptions::default())?,
    };
    Ok((cfg, outcome))
}
