//! Writes run outputs and the manifest describing them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::{Command, Outcome, TaskSeeds};
use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST_SCHEMA: u32 = 1;
pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub schema: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub code_version: String,
    pub command: String,
    pub config_file: String,
    pub config_hash: String,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub tasks: Vec<TaskSeeds>,
    pub outputs: Vec<OutputEntry>,
    pub flags: Vec<String>,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn code_version() -> String {
    format!("wickns {}", env!("CARGO_PKG_VERSION"))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Everything the caller needs to build a manifest besides the outcome.
pub struct RunInfo<'a> {
    pub command: Command,
    pub config: &'a ExperimentConfig,
    pub wall_time_seconds: f64,
}

/// Writes the resolved config, the outcome's files, the summary and the
/// manifest into `dir`.
pub fn write_run(dir: &Path, info: &RunInfo, outcome: Result<&Outcome, &CliError>) -> Result<RunManifest, CliError> {
    std::fs::create_dir_all(dir)?;
    let config_text = info.config.to_toml();
    write(dir, CONFIG_FILE, &config_text)?;
    let mut outputs = Vec::new();
    let (status, error, flags, tasks) = match outcome {
        Ok(o) => {
            for f in &o.files {
                write(dir, &f.name, &f.contents)?;
                outputs.push(OutputEntry {
                    file: f.name.clone(),
                    schema: f.schema.into(),
                    sha256: sha256_hex(f.contents.as_bytes()),
                });
            }
            let summary = serde_json::to_string_pretty(&o.summary(info.command)).expect("json") + "\n";
            write(dir, SUMMARY_FILE, &summary)?;
            outputs.push(OutputEntry {
                file: SUMMARY_FILE.into(),
                schema: "summary/v1".into(),
                sha256: sha256_hex(summary.as_bytes()),
            });
            let status = if o.failure.is_some() {
                "failed"
            } else if o.checks.values().all(|&c| c) {
                "ok"
            } else {
                "checks_failed"
            };
            (status, o.failure.clone(), o.flags.clone(), o.tasks.clone())
        }
        Err(e) => ("failed", Some(e.to_string()), vec!["runtime_failure".to_string()], Vec::new()),
    };
    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA,
        code_version: code_version(),
        command: info.command.name(),
        config_file: CONFIG_FILE.into(),
        config_hash: sha256_hex(config_text.as_bytes()),
        seed: info.config.seed,
        wall_time_seconds: info.wall_time_seconds,
        tasks,
        outputs,
        flags,
        status: status.into(),
        error,
    };
    write(dir, MANIFEST_FILE, &(serde_json::to_string_pretty(&manifest).expect("json") + "\n"))?;
    Ok(manifest)
}

/// The config path recorded by a manifest.
pub fn manifest_config(manifest_path: &Path, manifest: &RunManifest) -> PathBuf {
    manifest_path.parent().unwrap_or(Path::new(".")).join(&manifest.config_file)
}
