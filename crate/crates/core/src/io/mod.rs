//! Configuration files, event logs, numeric tables and reports.

mod config;
mod log;
mod report;
mod table;

pub use config::{AnalysisSection, ConfigFile, SequenceSection};
pub use log::{open_log, read_log, write_log, write_log_to, LogReader, LogWriter};
pub use report::{Report, Value, REPORT_FORMAT_VERSION};
pub use table::{Table, TABLE_FORMAT_VERSION};
