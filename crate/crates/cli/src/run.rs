//! Writes task outputs and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{io_err, Result};
use crate::tasks::{run_task, TaskOutput};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub task: String,
    pub config: RunConfig,
    /// SHA-256 of the canonical TOML form of `config`.
    pub config_sha256: String,
    pub files: Vec<FileRecord>,
    pub warnings: Vec<String>,
    pub summary: Value,
    pub strict: bool,
    pub threads: usize,
    pub wall_time_s: f64,
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(io_err(&path))
}

/// Runs `config` and writes its files plus `manifest.json` into `dir`.
pub fn execute(config: &RunConfig, dir: &Path, strict: bool) -> Result<(TaskOutput, Manifest)> {
    let start = Instant::now();
    let output = run_task(config, strict)?;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();
    for (name, contents) in &output.files {
        write_file(dir, name, contents)?;
        files.push(FileRecord { name: name.clone(), sha256: sha256_hex(contents.as_bytes()), bytes: contents.len() });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        task: config.task.name().to_string(),
        config: config.clone(),
        config_sha256: sha256_hex(config.to_toml().as_bytes()),
        files,
        warnings: output.warnings.clone(),
        summary: output.summary.clone(),
        strict,
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_file(dir, "manifest.json", &serde_json::to_string_pretty(&manifest)?)?;
    for w in &output.warnings {
        eprintln!("{}", serde_json::json!({ "warning": w }));
    }
    Ok((output, manifest))
}

/// Output directory precedence: command-line flag, then `HYPERCQED_OUTPUT_DIR`, then the configured path.
pub fn resolve_output(flag: Option<&Path>, configured: &Path) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os("HYPERCQED_OUTPUT_DIR").filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| configured.to_path_buf())
}
