//! Run manifests: who produced an artifact, from what inputs, with which
//! resolved configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Manifest emitted alongside every output artifact. Re-running a
/// subcommand with the same resolved config, input hashes and seed
/// reproduces the outputs bitwise; the timestamp is the only
/// run-dependent field.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub subcommand: String,
    pub resolved_config: Value,
    /// Input path -> SHA-256 of its bytes.
    pub input_hashes: BTreeMap<String, String>,
    pub seed: u64,
    pub threads: usize,
    pub timestamp_unix: u64,
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        resolved_config: Value,
        inputs: &[&Path],
        seed: u64,
        threads: usize,
    ) -> Result<Self> {
        let mut input_hashes = BTreeMap::new();
        for p in inputs {
            input_hashes.insert(p.display().to_string(), hash_file(p)?);
        }
        let timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(Self {
            schema_version: 1,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            resolved_config,
            input_hashes,
            seed,
            threads,
            timestamp_unix,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}

/// Resolves the effective seed: the `BEVPROMPT_SEED` environment variable
/// overrides any config seed (for CI pinning).
pub fn effective_seed(config_seed: u64) -> Result<u64> {
    match std::env::var("BEVPROMPT_SEED") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|e| crate::errors::CliError::schema(format!("BEVPROMPT_SEED: {e}")).into()),
        Err(_) => Ok(config_seed),
    }
}
