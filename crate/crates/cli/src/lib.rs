//! File formats and command plumbing behind the `cpdetect` binary.

pub mod config;
pub mod input;
pub mod output;

pub use config::{parse_experiment, ConfigError};
pub use input::{read_csv, read_csv_from, InputError};
pub use output::{emit_report, parse_report, write_rejection_table, ReportFormat};
