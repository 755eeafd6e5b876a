use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod report;

use report::Report;

pub const DEFAULT_SEED: u64 = 2012;

#[derive(Debug, Parser)]
#[command(
    name = "ftoffoli",
    version,
    about = "Verify and analyse fault-tolerant Toffoli constructions"
)]
pub struct Cli {
    /// Seed for every random choice made by the run.
    #[arg(long, global = true, env = "FTOFFOLI_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Emit the main table as CSV instead of the JSON report.
    #[arg(long, global = true)]
    pub csv: bool,

    /// Print the text dump of a construction and exit.
    #[arg(long, value_name = "NAME")]
    pub dump_circuit: Option<String>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the contract of one construction, or `all`.
    Verify {
        /// toffoli_star, four_t, seven_t, error_detecting, ancilla_prep,
        /// ancilla_consume, multi_control:N or all
        name: String,
    },
    /// Exact fault enumeration of the error-detecting Toffoli.
    Errors {
        /// Per-T error probabilities at which to evaluate the polynomials.
        #[arg(long = "p", value_delimiter = ',', default_values_t = vec![1e-8, 1e-4, 1e-2])]
        p: Vec<f64>,
        /// Monte Carlo trials per p value (0 skips sampling).
        #[arg(long, default_value_t = 0)]
        trials: u64,
    },
    /// Distillation cost comparison of the Toffoli schemes.
    Resources {
        /// JSON protocol/scheme configuration; built-in defaults otherwise.
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        #[arg(long)]
        p_raw: Option<f64>,
        /// Target Toffoli error.
        #[arg(long)]
        target: Option<f64>,
        /// Evaluate every scheme on raw T states.
        #[arg(long)]
        no_distillation: bool,
    },
}

pub enum Outcome {
    Report(Report),
    Text(String),
}

// A closed pipe (e.g. `| head`) is not an error worth a panic.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok((Outcome::Report(report), _)) => {
            emit(&(report.to_json() + "\n"));
            ExitCode::from(if report.summary.passed { 0 } else { 1 })
        }
        Ok((Outcome::Text(text), passed)) => {
            emit(&text);
            ExitCode::from(if passed { 0 } else { 1 })
        }
        Err(commands::CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
