//! Experiment runner for the gradient-noise Gaussianity toolkit.
//!
//! Four subcommands share one configuration mechanism (see [`config`]):
//! `sanity-sas`, `train-probe`, `estimate-alpha` and `test-1d`.

pub mod commands;
pub mod config;
pub mod error;
pub mod figure;

use std::path::Path;

pub use commands::Outcome;
pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SanitySas,
    TrainProbe,
    EstimateAlpha,
    Test1d,
}

impl Command {
    pub fn schema(self) -> &'static [config::Key] {
        match self {
            Command::SanitySas => config::SANITY_SAS,
            Command::TrainProbe => config::TRAIN_PROBE,
            Command::EstimateAlpha => config::ESTIMATE_ALPHA,
            Command::Test1d => config::TEST_1D,
        }
    }
}

/// Resolves defaults, an optional config file and `key=value` overrides.
pub fn load_config(cmd: Command, file: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let entries = file.map(config::read_config_file).transpose()?.unwrap_or_default();
    let overrides = overrides.iter().map(|s| config::parse_override(s)).collect::<Result<Vec<_>>>()?;
    RunConfig::resolve(cmd.schema(), &entries, &overrides)
}

pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Command::SanitySas => commands::sanity_sas(cfg),
        Command::TrainProbe => commands::train_probe(cfg),
        Command::EstimateAlpha => commands::estimate_alpha_cmd(cfg),
        Command::Test1d => commands::test_1d(cfg),
    }
}
