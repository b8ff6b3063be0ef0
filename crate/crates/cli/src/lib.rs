//! Command-line harness for the queuegrad solvers: problem files, trace CSV
//! files and the subcommands of the `queuegrad` binary.

pub mod commands;
pub mod problem_file;
pub mod trace_csv;

pub use commands::{exit_code, run_cli, Cli};
