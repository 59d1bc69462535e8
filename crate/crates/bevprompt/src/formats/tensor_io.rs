//! The binary tensor container and its JSON twin.
//!
//! Binary layout: magic `BPTN`, little-endian u32 rank, `rank` little-endian
//! u64 dimensions, then the row-major data as little-endian IEEE f64.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use bevprompt_core::numerics::Tensor;
use serde::{Deserialize, Serialize};

use crate::errors::CliError;

const MAGIC: &[u8; 4] = b"BPTN";

/// Human-readable fixture form: shape plus flat row-major data.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorJson {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl TryFrom<TensorJson> for Tensor {
    type Error = anyhow::Error;

    fn try_from(value: TensorJson) -> Result<Self> {
        Tensor::from_vec(value.shape, value.data)
            .map_err(|e| CliError::schema(format!("invalid tensor: {e}")).into())
    }
}

impl From<&Tensor> for TensorJson {
    fn from(t: &Tensor) -> Self {
        Self {
            shape: t.shape().to_vec(),
            data: t.data().to_vec(),
        }
    }
}

pub fn write_tensor_bptn(path: &Path, t: &Tensor) -> Result<()> {
    let mut file = fs::File::create(path)
        .with_context(|| format!("creating tensor container {}", path.display()))?;
    file.write_all(MAGIC)?;
    file.write_all(&(t.rank() as u32).to_le_bytes())?;
    for &d in t.shape() {
        file.write_all(&(d as u64).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(t.numel() * 8);
    for &v in t.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    file.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor_bptn(path: &Path) -> Result<Tensor> {
    let mut file = fs::File::open(path)
        .with_context(|| format!("opening tensor container {}", path.display()))?;
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        bail!(CliError::schema(format!(
            "{}: bad magic {magic:?}, expected BPTN",
            path.display()
        )));
    }
    let mut rank_bytes = [0u8; 4];
    file.read_exact(&mut rank_bytes)?;
    let rank = u32::from_le_bytes(rank_bytes) as usize;
    if rank > 8 {
        bail!(CliError::schema(format!("{}: rank {rank} too large", path.display())));
    }
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut dim = [0u8; 8];
        file.read_exact(&mut dim)?;
        shape.push(u64::from_le_bytes(dim) as usize);
    }
    let numel: usize = shape.iter().product();
    let mut buf = Vec::new();
    file.read_to_end(&mut buf)?;
    if buf.len() != numel * 8 {
        bail!(CliError::schema(format!(
            "{}: expected {} data bytes, found {}",
            path.display(),
            numel * 8,
            buf.len()
        )));
    }
    let data: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Tensor::from_vec(shape, data).map_err(|e| CliError::schema(format!("{}: {e}", path.display())).into())
}

pub fn write_tensor_json(path: &Path, t: &Tensor) -> Result<()> {
    let json = serde_json::to_string_pretty(&TensorJson::from(t))?;
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_tensor_json(path: &Path) -> Result<Tensor> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: TensorJson = serde_json::from_str(&raw)
        .with_context(|| format!("parsing tensor json {}", path.display()))?;
    parsed.try_into()
}

/// Reads either container by extension (`.bptn` or `.json`).
pub fn read_tensor_auto(path: &Path) -> Result<Tensor> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bptn") => read_tensor_bptn(path),
        Some("json") => read_tensor_json(path),
        other => bail!(CliError::schema(format!(
            "{}: unsupported tensor extension {other:?}",
            path.display()
        ))),
    }
}
