//! `chordfn`: grid scans, cuts, blind-spot reports and verification of
//! chord functions of Bohr-quantized states.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Io(String),
    Numerical(String),
    Acceptance(usize),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 1,
            Failure::Acceptance(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Acceptance(n) => write!(f, "{n} acceptance criteria failed"),
        }
    }
}

impl From<chordfn::Error> for Failure {
    fn from(e: chordfn::Error) -> Self {
        match e {
            chordfn::Error::NonConvergence { .. } | chordfn::Error::NoisyDerivative { .. } => {
                Failure::Numerical(e.to_string())
            }
            chordfn::Error::InvalidState(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "chordfn", version, about = "Chord functions of Bohr-quantized states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate χ on a rectangular grid and write CSV plus a JSON sidecar.
    Scan(Common),
    /// Evaluate one or more evaluators along a line through the origin.
    Cut {
        #[command(flatten)]
        common: Common,
        /// Direction `p,q`; normalized, so `s` is the signed chord length.
        #[arg(long, allow_hyphen_values = true)]
        direction: Option<String>,
        /// Range of `s` as `start,end`.
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Locate blind spots and compare them with the covariance-ellipse estimate.
    Blindspots(Common),
    /// Run the acceptance criteria and print a pass/fail table.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated criterion numbers; all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// `key = value` recipe file or a JSON sidecar from an earlier run.
    /// Flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    hbar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha3: Option<f64>,
    /// exact, fock, small, sp_small, sp_full, semiclassical or taylor:K;
    /// `cut` accepts a comma-separated list.
    #[arg(long)]
    evaluator: Option<String>,
    /// `p_min,p_max,q_min,q_max`.
    #[arg(long, allow_hyphen_values = true)]
    region: Option<String>,
    /// Grid points per axis.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quad_tol: Option<f64>,
    #[arg(long)]
    newton_tol: Option<f64>,
    #[arg(long)]
    caustic_tol: Option<f64>,
}

impl Common {
    fn resolve(&self, extra: &[(&str, Option<String>)]) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let show = |v: Option<f64>| v.map(|x| x.to_string());
        let flags = [
            ("n", self.n.map(|x| x.to_string())),
            ("hbar", show(self.hbar)),
            ("t", show(self.t)),
            ("alpha0", show(self.alpha0)),
            ("alpha1", show(self.alpha1)),
            ("alpha2", show(self.alpha2)),
            ("alpha3", show(self.alpha3)),
            ("evaluator", self.evaluator.clone()),
            ("region", self.region.clone()),
            ("resolution", self.resolution.map(|x| x.to_string())),
            ("quad_tol", show(self.quad_tol)),
            ("newton_tol", show(self.newton_tol)),
            ("caustic_tol", show(self.caustic_tol)),
        ];
        for (key, value) in flags.iter().chain(extra) {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Scan(common) => commands::scan(&common.resolve(&[])?),
        Command::Cut { common, direction, range, samples } => {
            let extra = [("direction", direction), ("range", range), ("samples", samples.map(|s| s.to_string()))];
            commands::cut(&common.resolve(&extra)?)
        }
        Command::Blindspots(common) => commands::blindspots(&common.resolve(&[])?),
        Command::Verify { common, only } => match commands::verify(&common.resolve(&[])?, &only)? {
            0 => Ok(()),
            n => Err(Failure::Acceptance(n)),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chordfn: {e}");
            ExitCode::from(e.code())
        }
    }
}
