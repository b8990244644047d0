//! Command-line front end: one subcommand per pipeline stage, CSV output
//! with a `#` provenance header, and atomic file writes.
//!
//! Exit codes: 0 on success, 1 for invalid input, 2 for numerical or
//! sampler failures.

mod args;
mod commands;
mod output;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;
use gibbs_mcid::{Error, Result};

pub use args::{Cli, Command, DEFAULT_SEED};
pub use commands::read_dataset;
pub use output::{read_recorded_argv, recorded_argv};

use output::Header;

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr: a first line
/// `error: <kind>: <reason>` followed by detail lines.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = argv
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let rendered = e.render().to_string();
                    let (reason, detail) = rendered.split_once("\n\nUsage:").unwrap_or((&rendered, ""));
                    let reason: Vec<&str> = reason.split_whitespace().collect();
                    let reason = reason.join(" ");
                    eprintln!("error: usage: {}", reason.trim_start_matches("error: "));
                    if !detail.is_empty() {
                        eprintln!("Usage:{}", detail.trim_end());
                    }
                    1
                }
            };
        }
    };
    match execute(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn execute(cli: &Cli, argv: &[String]) -> Result<()> {
    match cli.threads {
        Some(0) => Err(Error::Validation {
            field: "threads".into(),
            message: "must be >= 1".into(),
        }),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(&cli.command, argv))
        }
        None => dispatch(&cli.command, argv),
    }
}

fn dispatch(command: &Command, argv: &[String]) -> Result<()> {
    let h = Header::new(command.name(), argv);
    match command {
        Command::Generate(a) => commands::generate(a, h),
        Command::Estimate(a) => commands::estimate(a, h),
        Command::Posterior(a) => commands::posterior(a, h),
        Command::Calibrate(a) => commands::calibrate(a, h),
        Command::Study(a) => commands::study(a, h),
        Command::RateCheck(a) => commands::rate_check(a, h),
        Command::CompareLogistic(a) => commands::compare_logistic(a, h),
        Command::Replay(a) => {
            let recorded = read_recorded_argv(&a.from)?;
            if recorded.first().map(String::as_str) == Some("replay") {
                return Err(Error::Validation {
                    field: "from".into(),
                    message: "cannot replay a replay".into(),
                });
            }
            let mut again = vec![argv[0].clone()];
            again.extend(recorded);
            if let Some(out) = &a.out {
                again.push("--out".into());
                again.push(out.display().to_string());
            }
            let cli = Cli::try_parse_from(&again).map_err(|e| Error::Config {
                line: None,
                key: Some("argv".into()),
                message: e.to_string().lines().next().unwrap_or("").to_string(),
            })?;
            dispatch(&cli.command, &again)
        }
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {}: {e}", e.kind());
    if let Error::Replication { rep, seed, .. } = e {
        eprintln!("replication {rep} can be reproduced on its own from derived seed {seed}");
    }
    if e.is_validation() {
        eprintln!("run with --help for usage");
        1
    } else {
        2
    }
}
