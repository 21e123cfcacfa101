//! Command line, map files and run reports.

pub mod commands;
pub mod mapfile;
pub mod report;

pub use commands::{exit_code, replay, run, Outcome, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, TRIALS_ENV};
pub use mapfile::{load_map, parse_map, save_map, to_map_string, Representation};
pub use report::{compare, Mismatch, Report, Value, REPLAY_TOL};
