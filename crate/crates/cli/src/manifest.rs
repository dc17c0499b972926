//! Run manifest: what was run, with which inputs, and what it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use jumppolymer::experiments::SweepConfig;
use jumppolymer::rng::replica_seed;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub config: SweepConfig,
    /// SHA-256 of the canonical JSON of the effective config.
    pub config_hash: String,
    /// Git-style blob hash (SHA-256 over `blob <len>\0<bytes>`) of the config file.
    pub input_hash: String,
    pub seed: u64,
    pub replica_seeds: Vec<u64>,
    pub outputs: Vec<OutputFile>,
    pub violations: u64,
    pub warnings: Vec<String>,
    pub timings: Timings,
}

pub fn config_hash(cfg: &SweepConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

pub fn input_hash(input: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", input.len()));
    h.update(input);
    hex::encode(h.finalize())
}

fn describe(path: &Path) -> std::io::Result<OutputFile> {
    let bytes = std::fs::read(path)?;
    Ok(OutputFile {
        file: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl Manifest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        command: &str,
        cfg: &SweepConfig,
        input: &[u8],
        outputs: &[PathBuf],
        violations: u64,
        warnings: Vec<String>,
        total_seconds: f64,
    ) -> std::io::Result<Self> {
        let versions = BTreeMap::from([
            ("jumppolymer", jumppolymer::VERSION),
            ("jumppolymer-cli", env!("CARGO_PKG_VERSION")),
        ]);
        Ok(Manifest {
            command: command.to_string(),
            versions,
            config: cfg.clone(),
            config_hash: config_hash(cfg),
            input_hash: input_hash(input),
            seed: cfg.seed,
            replica_seeds: (0..cfg.replicas as u64).map(|r| replica_seed(cfg.seed, r)).collect(),
            outputs: outputs.iter().map(|p| describe(p)).collect::<std::io::Result<_>>()?,
            violations,
            warnings,
            timings: Timings { total_seconds },
        })
    }

    /// Writes `manifest_<command>.json` into `dir` and returns its path.
    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join(format!("manifest_{}.json", self.command));
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
