//! Scenario files, batch commands and their on-disk artifacts.
//!
//! Each command takes a validated [`ScenarioConfig`] and an output directory.
//! Every command writes `manifest.json` and a copy of the resolved config
//! (`config.toml`) so the run can be repeated exactly.

mod check;
mod config;
mod iss;
mod output;
mod simulate;

pub use check::{
    cmd_gains_check, gains_check, ContinuousChecks, GainsCheckEntry, GainsCheckReport, HybridChecks, LmiSummary,
};
pub use config::{
    InitialConfig, IssSection, NoiseConfig, ObserverKind, ReportConfig, ScenarioConfig, ScheduleConfig,
    TrajectoryConfig, WorldConfig,
};
pub use iss::{cmd_iss_study, iss_verdict};
pub use output::{comparison_svg, PlotSeries};
pub use simulate::{cmd_simulate, simulate, ObserverReport, ObserverRun, Simulation};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::gains::GainsError;
use crate::observer::ObserverError;
use crate::world::WorldError;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config error: {0}")]
    Config(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("cannot write {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl RunnerError {
    /// 2 for configuration errors, 3 for failed checks, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::CheckFailed(_) => 3,
            Self::Runtime(_) | Self::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Io { path: path.to_path_buf(), message: err.to_string() }
    }
}

impl From<ObserverError> for RunnerError {
    fn from(e: ObserverError) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<WorldError> for RunnerError {
    fn from(e: WorldError) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<GainsError> for RunnerError {
    fn from(e: GainsError) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<AnalysisError> for RunnerError {
    fn from(e: AnalysisError) -> Self {
        Self::Runtime(e.to_string())
    }
}

/// Record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario: String,
    /// SHA-256 of the resolved config written next to the manifest.
    pub config_sha256: String,
    pub version: String,
    pub seed: u64,
    /// Files shared by all observers, relative to the output directory.
    pub files: Vec<String>,
    /// Files written for each observer.
    pub observer_files: BTreeMap<String, Vec<String>>,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub(crate) fn start(
        command: &str,
        config: &ScenarioConfig,
        out: &Path,
    ) -> Result<(Self, std::time::Instant), RunnerError> {
        std::fs::create_dir_all(out).map_err(|e| RunnerError::io(out, e))?;
        let text = config.to_toml()?;
        let path = out.join("config.toml");
        std::fs::write(&path, &text).map_err(|e| RunnerError::io(&path, e))?;
        let manifest = Self {
            command: command.into(),
            scenario: config.name.clone(),
            config_sha256: hex::encode(Sha256::digest(text.as_bytes())),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            files: vec!["config.toml".into()],
            observer_files: BTreeMap::new(),
            wall_clock_s: 0.0,
        };
        Ok((manifest, std::time::Instant::now()))
    }

    pub(crate) fn finish(mut self, started: std::time::Instant, out: &Path) -> Result<Self, RunnerError> {
        self.wall_clock_s = started.elapsed().as_secs_f64();
        self.files.push("manifest.json".into());
        output::write_json(&out.join("manifest.json"), &self)?;
        Ok(self)
    }
}
