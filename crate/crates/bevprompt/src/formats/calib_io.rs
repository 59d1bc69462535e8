//! Calibration file: intrinsics, world-to-camera extrinsics, image size.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use bevprompt_core::geometry::CameraCalib;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibJson {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Row-major 3x3 world-to-camera rotation.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    pub image_width: f64,
    pub image_height: f64,
}

impl From<&CameraCalib> for CalibJson {
    fn from(c: &CameraCalib) -> Self {
        let r = &c.rotation;
        Self {
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            rotation: [
                r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
            ],
            translation: c.translation,
            image_width: c.image_width,
            image_height: c.image_height,
        }
    }
}

impl TryFrom<CalibJson> for CameraCalib {
    type Error = anyhow::Error;

    fn try_from(j: CalibJson) -> Result<Self> {
        let r = j.rotation;
        CameraCalib::new(
            j.fx,
            j.fy,
            j.cx,
            j.cy,
            [[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]],
            j.translation,
            j.image_width,
            j.image_height,
        )
        .map_err(|e| crate::errors::CliError::schema(format!("invalid calibration: {e}")).into())
    }
}

pub fn read_calib(path: &Path) -> Result<CameraCalib> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: CalibJson =
        serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
    parsed.try_into()
}

pub fn write_calib(path: &Path, calib: &CameraCalib) -> Result<()> {
    let json = serde_json::to_string_pretty(&CalibJson::from(calib))?;
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
