//! Scenario files, presets, reports and the acceptance suite behind the
//! `qorder` command.

pub mod config;
pub mod emit;
pub mod error;
mod oracle;
pub mod presets;
mod resolve;
pub mod run;
pub mod selftest;
pub mod sweep;

pub use config::{parse_scenario, ScenarioConfig};
pub use emit::{emit_report, Format};
pub use error::{CliError, Result};
pub use run::{run_scenario, ScenarioReport};
