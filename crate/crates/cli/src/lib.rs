//! Command-line front end: `bench-tables`, `search`, `report` and `nwot`.
//!
//! Exit codes are listed in [`error::exit`].

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_bench_tables, cmd_nwot, cmd_report, cmd_search};
pub use config::{BenchConfig, Cli, Command, NwotConfig, ReportConfig, SearchConfig};
pub use error::{exit, CliError};
