//! JSON-lines detection and annotation records.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use bevprompt_core::geometry::{Annotation3D, Box2D, Cuboid3D};
use bevprompt_core::grouping::Vocabulary;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::errors::CliError;

/// One 3D cuboid record (annotation or detection).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Record3D {
    pub frame: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub h: f64,
    pub l: f64,
    pub yaw: f64,
    pub label: String,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occlusion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
}

/// One 2D box record.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Record2D {
    pub frame: u64,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub label: String,
    pub score: f64,
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: invalid record", path.display(), lineno + 1))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut buf = String::new();
    for r in records {
        buf.push_str(&serde_json::to_string(r)?);
        buf.push('\n');
    }
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn label_index(vocab: &Vocabulary, label: &str) -> Result<u32> {
    vocab.index_of(label).ok_or_else(|| {
        CliError::schema(format!(
            "unknown class label {label:?} (vocabulary: {:?})",
            vocab.names()
        ))
        .into()
    })
}

/// Groups 3D records into per-frame annotation lists. Frames are dense
/// `0..=max_frame`; frames without records come out empty.
pub fn frames_from_records3d(
    records: &[Record3D],
    vocab: &Vocabulary,
) -> Result<Vec<Vec<Annotation3D>>> {
    let n_frames = records.iter().map(|r| r.frame + 1).max().unwrap_or(0) as usize;
    let mut frames = vec![Vec::new(); n_frames];
    for r in records {
        let label = label_index(vocab, &r.label)?;
        let cuboid = Cuboid3D::new(r.x, r.y, r.z, r.w, r.h, r.l, r.yaw, label, r.score)
            .map_err(crate::errors::from_core)?;
        frames[r.frame as usize].push(Annotation3D {
            cuboid,
            occlusion: r.occlusion,
            truncation: r.truncation,
        });
    }
    Ok(frames)
}

/// Groups 2D records into per-frame box lists (dense frames, as above).
pub fn frames_from_records2d(records: &[Record2D], vocab: &Vocabulary) -> Result<Vec<Vec<Box2D>>> {
    let n_frames = records.iter().map(|r| r.frame + 1).max().unwrap_or(0) as usize;
    let mut frames = vec![Vec::new(); n_frames];
    for r in records {
        let label = label_index(vocab, &r.label)?;
        let boxed = Box2D::new(r.x_min, r.y_min, r.x_max, r.y_max, label, r.score)
            .map_err(crate::errors::from_core)?;
        frames[r.frame as usize].push(boxed);
    }
    Ok(frames)
}

pub fn records3d_from_frames(
    frames: &[Vec<Annotation3D>],
    vocab: &Vocabulary,
) -> Result<Vec<Record3D>> {
    let mut out = Vec::new();
    for (frame, anns) in frames.iter().enumerate() {
        for a in anns {
            let c = &a.cuboid;
            out.push(Record3D {
                frame: frame as u64,
                x: c.x,
                y: c.y,
                z: c.z,
                w: c.w,
                h: c.h,
                l: c.l,
                yaw: c.yaw,
                label: vocab.name(c.label).map_err(crate::errors::from_core)?.to_string(),
                score: c.score,
                occlusion: a.occlusion,
                truncation: a.truncation,
            });
        }
    }
    Ok(out)
}

pub fn records2d_from_frames(frames: &[Vec<Box2D>], vocab: &Vocabulary) -> Result<Vec<Record2D>> {
    let mut out = Vec::new();
    for (frame, boxes) in frames.iter().enumerate() {
        for b in boxes {
            out.push(Record2D {
                frame: frame as u64,
                x_min: b.x_min,
                y_min: b.y_min,
                x_max: b.x_max,
                y_max: b.y_max,
                label: vocab.name(b.label).map_err(crate::errors::from_core)?.to_string(),
                score: b.score,
            });
        }
    }
    Ok(out)
}
