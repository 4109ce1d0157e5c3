use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rdb_core::engine::MedianThreshold;
use rdb_core::error_control::TailLaw;
use rdb_core::{ErrorMode, RdbConfig, RdbError};

mod simulate;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "rdb", version, about = "Robust differential abundance testing for compositional counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a count table against a two-level group or a numeric outcome.
    Test(test::TestArgs),
    /// Run a simulation benchmark and report FWER, FDR and power.
    Simulate(simulate::SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Mode {
    Fwer,
    Fdr,
}

impl From<Mode> for ErrorMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Fwer => ErrorMode::Fwer,
            Mode::Fdr => ErrorMode::Fdr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Tail {
    Rayleigh,
    Halfnormal,
}

/// Options shared by both subcommands.
#[derive(Args)]
pub struct ProcedureArgs {
    /// Target error level.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Width factor of the two-sided critical value.
    #[arg(long = "rq", default_value_t = 0.2)]
    r_q: f64,
    /// Median band: a number, or `auto` for sqrt(2 ln d / d).
    #[arg(long = "m-threshold", default_value = "auto")]
    m_threshold: String,
    /// Null tail law for the FDR critical value search.
    #[arg(long = "fdr-tail", value_enum, default_value = "rayleigh")]
    fdr_tail: Tail,
}

impl ProcedureArgs {
    pub fn config(&self, mode: Mode) -> Result<RdbConfig, Failure> {
        let median_threshold = match self.m_threshold.as_str() {
            "auto" => MedianThreshold::Auto,
            s => MedianThreshold::Fixed(s.parse().map_err(|_| {
                Failure::user(format!("--m-threshold expects a number or `auto`, got `{s}`"))
            })?),
        };
        let cfg = RdbConfig {
            alpha: self.alpha,
            r_q: self.r_q,
            median_threshold,
            mode: mode.into(),
            fdr_tail: match self.fdr_tail {
                Tail::Rayleigh => TailLaw::Rayleigh,
                Tail::Halfnormal => TailLaw::HalfNormal,
            },
            ..RdbConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A failed run: message plus exit status (1 for user errors, 2 otherwise).
#[derive(Debug)]
pub struct Failure {
    pub message: String,
    pub code: u8,
}

impl Failure {
    pub fn user(message: impl Into<String>) -> Self {
        Failure {
            message: message.into(),
            code: 1,
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Failure {
            message: message.into(),
            code: 2,
        }
    }
}

impl From<RdbError> for Failure {
    fn from(e: RdbError) -> Self {
        match e {
            RdbError::Replicate { .. } => Failure::internal(e.to_string()),
            _ => Failure::user(e.to_string()),
        }
    }
}

/// Writes to `path`, or to stdout when absent.
pub fn write_output(
    path: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), Failure> {
    let result = match path {
        Some(p) => File::create(p).and_then(|f| {
            let mut out = BufWriter::new(f);
            write(&mut out)?;
            out.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write(&mut out).and_then(|_| out.flush())
        }
    };
    result.map_err(|e| match path {
        Some(p) => Failure::user(format!("cannot write {}: {e}", p.display())),
        None => Failure::internal(format!("cannot write to stdout: {e}")),
    })
}

pub fn write_file(path: &PathBuf, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::user(format!("cannot write {}: {e}", path.display())))
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
    let outcome = std::panic::catch_unwind(|| match cli.command {
        Command::Test(args) => test::run(args),
        Command::Simulate(args) => simulate::run(args),
    });
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(2),
    }
}
