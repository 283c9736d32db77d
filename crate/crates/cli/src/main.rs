// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod failure;
mod output;
mod parse;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser};

use commands::Command;
use failure::Failure;

#[derive(Parser)]
#[command(name = "indicatrix", version, about = "Fourier transforms of indicator functions and their integrability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const THREADS_VAR: &str = "INDICATRIX_THREADS";

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| Failure::config(format!("{THREADS_VAR}={raw:?} must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(format!("cannot size the thread pool: {e}")))
}

fn fail(f: &Failure) -> ExitCode {
    eprintln!("{}", f.report());
    ExitCode::from(f.code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            return fail(&Failure::config(msg.trim().to_string()));
        }
    };
    if let Err(f) = configure_threads() {
        return fail(&f);
    }
    // Anything that still panics is reported like any other failure instead of a backtrace.
    panic::set_hook(Box::new(|_| {}));
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| commands::run(cli.command)));
    let _ = panic::take_hook();
    match outcome {
        Ok(Ok(summary)) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Ok(Err(f)) => fail(&f),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(&Failure::Numeric(format!("internal error: {msg}")))
        }
    }
}
