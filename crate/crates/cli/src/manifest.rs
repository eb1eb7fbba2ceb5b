use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::error::{CliError, CliResult};

/// Written next to every output as this file name; one per directory.
pub const MANIFEST_NAME: &str = "glosshift.manifest.json";

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

/// What was run, on what, with which seeds.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub subcommand: String,
    pub seeds: BTreeMap<String, u64>,
    pub threads: usize,
    pub config: Option<PathBuf>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub started_at: String,
    pub finished_at: String,
}

fn now() -> String {
    OffsetDateTime::now_utc()
        .format(&Rfc3339)
        .unwrap_or_else(|_| "unknown".into())
}

pub fn sha256_file(path: &Path) -> io::Result<(String, u64)> {
    let mut hasher = Sha256::new();
    let bytes = io::copy(&mut BufReader::new(File::open(path)?), &mut hasher)?;
    let hex = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok((hex, bytes))
}

/// Collects inputs and outputs while a subcommand runs.
#[derive(Debug)]
pub struct Recorder {
    subcommand: String,
    started_at: String,
    pub seeds: BTreeMap<String, u64>,
    inputs: Vec<InputDigest>,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn new(subcommand: &str) -> Self {
        Recorder {
            subcommand: subcommand.to_owned(),
            started_at: now(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Digests `path` now, before any output could overwrite it.
    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        if !self.inputs.iter().any(|d| d.path == path) {
            let (sha256, bytes) = sha256_file(path).map_err(CliError::io(path))?;
            self.inputs.push(InputDigest {
                path: path.to_owned(),
                sha256,
                bytes,
            });
        }
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        if !self.outputs.iter().any(|p| p == path) {
            self.outputs.push(path.to_owned());
        }
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.to_owned(), seed);
    }

    /// Writes one manifest into every directory that received an output.
    /// Returns the manifest paths.
    pub fn finish(mut self, threads: usize, config: Option<&Path>) -> CliResult<Vec<PathBuf>> {
        if self.outputs.is_empty() {
            return Ok(Vec::new());
        }
        if let Some(c) = config {
            self.input(c)?;
        }
        let manifest = RunManifest {
            tool: "glosshift",
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().collect(),
            subcommand: self.subcommand,
            seeds: self.seeds,
            threads,
            config: config.map(Path::to_owned),
            inputs: self.inputs,
            outputs: self.outputs.clone(),
            started_at: self.started_at,
            finished_at: now(),
        };
        let mut dirs: Vec<PathBuf> = Vec::new();
        for out in &self.outputs {
            let dir = match out.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
                _ => PathBuf::from("."),
            };
            if !dirs.contains(&dir) {
                dirs.push(dir);
            }
        }
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let mut written = Vec::new();
        for dir in dirs {
            let path = dir.join(MANIFEST_NAME);
            std::fs::write(&path, format!("{json}\n")).map_err(CliError::io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}
