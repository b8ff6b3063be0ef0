use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use queuegrad_cli::commands::{exit_code, run_cli, Cli, EXIT_CONFIG};

/// Sizes the global rayon pool from `QUEUEGRAD_THREADS` when it is set.
#[cfg(feature = "parallel")]
fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("QUEUEGRAD_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("QUEUEGRAD_THREADS must be a positive integer, got '{value}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> Result<(), String> {
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = run_cli(cli, &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
