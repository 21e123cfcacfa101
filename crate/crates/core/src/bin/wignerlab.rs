use std::io::Write;
use std::process::ExitCode;

use wignerlab::cli_io::{run, EXIT_NUMERICAL};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let outcome = match std::panic::catch_unwind(|| run(args)) {
        Ok(o) => o,
        // a panic inside the numerics is an internal failure, not a usage error
        Err(_) => return ExitCode::from(EXIT_NUMERICAL as u8),
    };
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.code as u8)
}
