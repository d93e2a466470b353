//! Scenario runner for the OTDR toolkit: config ingestion, CSV and plot
//! emission, and the invariant suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use commands::{coeffs, mc, region, spectrum};
use config::{parse_config, ScenarioConfig, DEFAULT_CONFIG};
use error::{CliError, Result};
use output::Artifact;
use verify::verify_suite;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Coeffs,
    Spectrum,
    Region,
    Mc,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Coeffs => "coeffs",
            Self::Spectrum => "spectrum",
            Self::Region => "region",
            Self::Mc => "mc",
            Self::Verify => "verify",
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_VERIFY_FAILED: u8 = 2;

#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// `Some(false)` when `verify` found a failing invariant.
    pub verified: Option<bool>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        match self.verified {
            Some(false) => EXIT_VERIFY_FAILED,
            _ => EXIT_OK,
        }
    }
}

/// Reads `path`, or the shipped default when `None`.
pub fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|source| CliError::Io { path: p.to_owned(), source })?,
        None => DEFAULT_CONFIG.to_owned(),
    };
    Ok(parse_config(&text)?)
}

pub fn apply_overrides(config: &mut ScenarioConfig, overrides: &Overrides) -> Result<()> {
    if let Some(seed) = overrides.seed {
        config.mc.seed = seed;
    }
    if let Some(workers) = overrides.workers {
        if workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        config.mc.workers = workers;
    }
    if let Some(out) = &overrides.out {
        config.output_directory = out.clone();
    }
    Ok(())
}

/// Computes the artifacts of `command` without touching the filesystem.
pub fn execute(command: Command, config: &ScenarioConfig) -> Result<Outcome> {
    Ok(match command {
        Command::Coeffs => Outcome { artifacts: coeffs(config)?, verified: None },
        Command::Spectrum => Outcome { artifacts: spectrum(config)?, verified: None },
        Command::Region => Outcome { artifacts: region(config)?, verified: None },
        Command::Mc => Outcome { artifacts: mc(config)?, verified: None },
        Command::Verify => {
            let report = verify_suite(config)?;
            Outcome { artifacts: vec![report.artifact(config)?], verified: Some(report.passed()) }
        }
    })
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_owned(), source })?;
    artifacts
        .iter()
        .map(|a| a.write_to(dir).map_err(|source| CliError::Io { path: dir.join(&a.name), source }))
        .collect()
}
