//! Command-line front end: argument and config parsing, CSV/JSON emission
//! and figure recipes.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod reproduce;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "iceberg", version, about = "Expected squared ACF analysis, pulse design and ranging simulation")]
pub struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, env = "ICEBERG_THREADS", global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form iceberg, sea level and total per lag
    AcfTheory(commands::AcfTheoryArgs),
    /// Monte Carlo squared ACF against the closed form
    AcfMc(commands::AcfMcArgs),
    /// Design a Nyquist roll-off that suppresses a sidelobe region
    Shape(commands::ShapeArgs),
    /// Two-target matched-filter ranging sweep
    RangeSim(commands::RangeSimArgs),
    /// Regenerate the data behind a figure
    Reproduce(reproduce::ReproduceArgs),
}

/// Run `argv` and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    match cli.threads {
        Some(0) => return Err(CliError::Validation(vec!["threads: must be >= 1".into()])),
        Some(t) => pool = pool.num_threads(t),
        None => {}
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::AcfTheory(a) => commands::acf_theory(a),
        Command::AcfMc(a) => commands::acf_mc(a),
        Command::Shape(a) => commands::shape(a),
        Command::RangeSim(a) => commands::range_sim(a),
        Command::Reproduce(a) => reproduce::reproduce(a),
    })
}
