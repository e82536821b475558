//! `qpos`: load maps from JSON, certify them, and print deterministic reports.

mod commands;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use qpos_core::Error;

#[derive(Parser, Debug)]
#[command(name = "qpos", version, about = "Certify q-positive maps, corners and boundary weight simulations")]
pub struct Cli {
    /// Numerical tolerance; each command has its own default when absent.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Comma-separated parameter grid; defaults depend on the command.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub t_grid: Option<Vec<f64>>,
    /// ε values for deformation checks.
    #[arg(long, global = true, value_delimiter = ',', default_value = "0.1,0.5,0.9")]
    pub eps_grid: Vec<f64>,
    /// Seed for randomized searches.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dimensions, unitality, self-adjointness, CP verdict, spectrum and q-positivity.
    Analyze { path: String },
    /// Classify a unital q-positive map as q-pure or not.
    Classify { path: String },
    /// Corner and q-corner checks between two maps.
    Corner(CornerArgs),
    /// Truncated boundary weights, contraction bounds and normal-spine decay.
    Bwsim(BwsimArgs),
    /// Write a named example map as JSON.
    Examples(ExampleArgs),
}

#[derive(clap::Args, Debug)]
pub struct CornerArgs {
    /// Left diagonal map (Kraus form for --contraction).
    #[arg(long)]
    pub left: Option<String>,
    /// Right diagonal map.
    #[arg(long)]
    pub right: Option<String>,
    /// JSON matrix `C` coupling the Kraus operators of both sides.
    #[arg(long, group = "mode")]
    pub contraction: Option<String>,
    /// Maximize the corner norm between two rank-one maps.
    #[arg(long, group = "mode")]
    pub auto_max: bool,
    /// JSON unitary `U`: corner from the left map to its conjugate.
    #[arg(long, group = "mode")]
    pub unitary: Option<String>,
    /// Corner from the Schur normal form for --lambdas to the identity on ℂ.
    #[arg(long, group = "mode")]
    pub identity_target: bool,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambdas: Option<Vec<f64>>,
    /// Exit with status 1 unless the corner is hypermaximal.
    #[arg(long)]
    pub assert_hypermaximal: bool,
}

#[derive(clap::Args, Debug)]
pub struct BwsimArgs {
    /// Unital q-positive map.
    #[arg(long)]
    pub map: String,
    /// `indicator01` or a JSON file `{"x": [...], "f": [...]}`.
    #[arg(long, default_value = "indicator01")]
    pub profile: String,
    /// Report the normal-spine decay table instead of the bound table.
    #[arg(long)]
    pub decay: bool,
    #[arg(long, default_value_t = qpos_core::bwsim::DEFAULT_T_FIXED)]
    pub t_fixed: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.1,0.03,0.01")]
    pub b_grid: Vec<f64>,
    /// Print the table as TSV instead of the JSON report.
    #[arg(long)]
    pub tsv: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleName {
    SchurCounterexample,
    Phiu,
    StateMap,
    BasischangeCorner,
    IdentityCorner,
}

#[derive(clap::Args, Debug)]
pub struct ExampleArgs {
    pub name: ExampleName,
    /// Eigenvalue parameters (sum zero) for `phiu` and `identity-corner`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambdas: Option<Vec<f64>>,
    /// Diagonal of the density for `state-map` and `basischange-corner`.
    #[arg(long, value_delimiter = ',')]
    pub diag: Option<Vec<f64>>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<String>,
}

/// Failure categories mapped to exit statuses.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::SingularResolvent { .. }
            | Error::Singular(_)
            | Error::Diverges { .. }
            | Error::NoConvergence(_)
            | Error::QuadratureFailure(_)
            | Error::QuadratureMismatch(_)
            | Error::ReconstructionFailed(_)
            | Error::BoundViolated { .. } => Failure::Numerical(msg),
            _ => Failure::Input(msg),
        }
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = commands::run(&cli, &args);
    if let Ok(output) = &result {
        for line in &output.summary {
            eprintln!("{line}");
        }
    }
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(output) => {
            print!("{}", output.text);
            match output.assertion_failure {
                Some(msg) => {
                    eprintln!("assertion failed: {msg}");
                    ExitCode::from(1)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
