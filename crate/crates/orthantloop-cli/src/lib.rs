//! Command-line front end for `orthantloop`: config parsing, dispatch,
//! validation checks and record output.

pub mod checks;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use run::{execute, run, Command, RunOutcome, RunRequest};
