//! Scenario files, data export and end-to-end verification on top of the
//! `bicfreeze` engine.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod scenario;
pub mod verify;

pub use config::{ScenarioConfig, StateSelection};
pub use error::CliError;
pub use scenario::Scenario;
