//! File formats, configuration and subcommands behind the `soilradar`
//! binary. Everything here is also usable as a library, which is how the
//! integration tests drive it.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use config::CampaignConfig;
pub use error::{CliError, Result};
