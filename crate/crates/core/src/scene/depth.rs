use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use super::{DepthMap, ImageMeta};
use crate::error::{ForgeError, Result};

/// How a stored 16-bit value maps to scene depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthMode {
    /// `z = v * depth_scale`
    #[default]
    Linear,
    /// `z = depth_scale / max(v, 1)`, for disparity-like outputs
    Inverse,
}

impl DepthMode {
    pub fn convert(self, v: u16, depth_scale: f64) -> f64 {
        match self {
            DepthMode::Linear => v as f64 * depth_scale,
            DepthMode::Inverse => depth_scale / (v.max(1) as f64),
        }
    }
}

/// Loads the 16-bit single-channel depth PNG at `depth_dir/meta.depth_file`.
pub fn load_depth(
    meta: &ImageMeta,
    depth_dir: impl AsRef<Path>,
    depth_scale: f64,
    depth_mode: DepthMode,
) -> Result<DepthMap> {
    let path = depth_dir.as_ref().join(&meta.depth_file);
    if !(depth_scale.is_finite() && depth_scale > 0.0) {
        return Err(ForgeError::InvalidParameter {
            name: "depth_scale",
            message: format!("must be finite and > 0, got {depth_scale}"),
        });
    }
    let img = image::ImageReader::open(&path)
        .map_err(|e| ForgeError::io(&path, e))?
        .with_guessed_format()
        .map_err(|e| ForgeError::io(&path, e))?
        .decode()
        .map_err(|e| ForgeError::Depth {
            path: path.clone(),
            message: e.to_string(),
        })?;
    let buf = match img {
        DynamicImage::ImageLuma16(buf) => buf,
        other => {
            return Err(ForgeError::Depth {
                path,
                message: format!("expected 16-bit single-channel image, got {:?}", other.color()),
            })
        }
    };
    if buf.width() != meta.width || buf.height() != meta.height {
        return Err(ForgeError::DimensionMismatch {
            expected_w: meta.width,
            expected_h: meta.height,
            got_w: buf.width(),
            got_h: buf.height(),
        });
    }
    let values = buf
        .pixels()
        .map(|p| depth_mode.convert(p.0[0], depth_scale))
        .collect();
    DepthMap::new(meta.width, meta.height, values)
}

/// Writes raw 16-bit values as a grayscale PNG.
pub fn write_depth_png(path: impl AsRef<Path>, width: u32, height: u32, raw: &[u16]) -> Result<()> {
    let path = path.as_ref();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(width, height, raw.to_vec())
        .ok_or_else(|| ForgeError::InvalidParameter {
            name: "raw",
            message: format!("{} values do not fill {width}x{height}", raw.len()),
        })?;
    buf.save(path).map_err(|e| ForgeError::Depth {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
