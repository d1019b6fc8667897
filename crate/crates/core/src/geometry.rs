//! Pinhole camera, depth backprojection and robust per-object depth ranges.

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::scene::{BBox, DepthMap, Mask};

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        for (name, v) in [("fx", fx), ("fy", fy)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ForgeError::InvalidParameter {
                    name,
                    message: format!("focal length must be finite and > 0, got {v}"),
                });
            }
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(ForgeError::InvalidParameter {
                name: "principal point",
                message: format!("({cx}, {cy}) is not finite"),
            });
        }
        Ok(CameraModel { fx, fy, cx, cy })
    }

    pub fn principal_point_within(&self, width: u32, height: u32) -> bool {
        (0.0..=width as f64).contains(&self.cx) && (0.0..=height as f64).contains(&self.cy)
    }

    /// Lifts pixel `(u, v)` at depth `z` to camera coordinates.
    #[inline]
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Point3 {
        [(u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z]
    }

    /// Forward projection; `z` must be positive.
    #[inline]
    pub fn project(&self, p: Point3) -> (f64, f64) {
        (self.fx * p[0] / p[2] + self.cx, self.fy * p[1] / p[2] + self.cy)
    }
}

/// Camera with the principal point at the image center and a square pixel
/// focal length derived from the horizontal field of view.
pub fn default_intrinsics(width: u32, height: u32, fov_deg: f64) -> Result<CameraModel> {
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(ForgeError::InvalidParameter {
            name: "fov_deg",
            message: format!("must lie in (0, 180), got {fov_deg}"),
        });
    }
    if width == 0 || height == 0 {
        return Err(ForgeError::InvalidParameter {
            name: "image size",
            message: format!("{width}x{height}"),
        });
    }
    let half_w = width as f64 / 2.0;
    let f = half_w / tan_deg(fov_deg / 2.0);
    CameraModel::new(f, f, half_w, height as f64 / 2.0)
}

/// Tangent of an angle in degrees on (0, 90), exact at 45.
fn tan_deg(theta: f64) -> f64 {
    if theta == 45.0 {
        1.0
    } else if theta > 45.0 {
        1.0 / (90.0 - theta).to_radians().tan()
    } else {
        theta.to_radians().tan()
    }
}

/// 3x3 row-major rotation applied to backprojected points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rotation(pub [f64; 9]);

impl Default for Rotation {
    fn default() -> Self {
        Rotation::IDENTITY
    }
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        let m = &self.0;
        [
            m[0] * p[0] + m[1] * p[1] + m[2] * p[2],
            m[3] * p[0] + m[4] * p[1] + m[5] * p[2],
            m[6] * p[0] + m[7] * p[1] + m[8] * p[2],
        ]
    }
}

/// Backprojected points of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub owner: u64,
    pub points: Vec<Point3>,
}

impl PointSet {
    pub fn rotated(&self, rotation: &Rotation) -> PointSet {
        if rotation.is_identity() {
            return self.clone();
        }
        PointSet {
            owner: self.owner,
            points: self.points.iter().map(|&p| rotation.apply(p)).collect(),
        }
    }

    pub fn z_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p[2])
    }
}

/// Pixels of an object: a decoded mask, or the bbox interior when no mask exists.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Mask(&'a Mask),
    BBox(BBox),
}

impl Region<'_> {
    fn for_each_pixel(&self, width: u32, height: u32, mut f: impl FnMut(u32, u32)) {
        match self {
            Region::Mask(mask) => mask
                .pixels()
                .filter(|&(u, v)| u < width && v < height)
                .for_each(|(u, v)| f(u, v)),
            Region::BBox(b) => {
                let (cols, rows) = b.pixel_span(width, height);
                for v in rows {
                    for u in cols.clone() {
                        f(u, v);
                    }
                }
            }
        }
    }
}

/// Lifts every positive-depth pixel of `region` to 3D. Zero-depth pixels are skipped.
pub fn backproject(depth: &DepthMap, cam: &CameraModel, region: Region<'_>, owner: u64) -> Result<PointSet> {
    let mut points = Vec::new();
    region.for_each_pixel(depth.width, depth.height, |u, v| {
        let z = depth.get(u, v);
        if z > 0.0 && z.is_finite() {
            points.push(cam.unproject(u as f64, v as f64, z));
        }
    });
    if points.is_empty() {
        return Err(ForgeError::EmptyRegion { object_id: owner });
    }
    Ok(PointSet { owner, points })
}

/// Closed depth interval of one object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZRange {
    pub z_min: f64,
    pub z_max: f64,
}

impl ZRange {
    pub fn new(z_min: f64, z_max: f64) -> Result<Self> {
        if !(z_min.is_finite() && z_max.is_finite() && 0.0 <= z_min && z_min <= z_max) {
            return Err(ForgeError::InvalidParameter {
                name: "z range",
                message: format!("[{z_min}, {z_max}] must satisfy 0 <= z_min <= z_max"),
            });
        }
        Ok(ZRange { z_min, z_max })
    }

    pub fn midpoint(&self) -> f64 {
        (self.z_min + self.z_max) / 2.0
    }

    pub fn scaled(&self, s: f64) -> ZRange {
        ZRange {
            z_min: self.z_min * s,
            z_max: self.z_max * s,
        }
    }
}

/// Nearest-rank percentile bounds of the z values: `[P(trim), P(100 - trim)]`.
///
/// `trim_pct = 0` gives the exact min and max.
pub fn object_z_range(points: &PointSet, trim_pct: f64) -> Result<ZRange> {
    if !(0.0..50.0).contains(&trim_pct) {
        return Err(ForgeError::InvalidParameter {
            name: "trim_pct",
            message: format!("must lie in [0, 50), got {trim_pct}"),
        });
    }
    let mut zs: Vec<f64> = points.z_values().collect();
    if zs.is_empty() {
        return Err(ForgeError::Empty("point set"));
    }
    zs.sort_by(f64::total_cmp);
    let lo = nearest_rank(&zs, trim_pct);
    let hi = nearest_rank(&zs, 100.0 - trim_pct);
    ZRange::new(lo, hi)
}

/// `ceil(p/100 * n)`-th order statistic (1-based), clamped to `[1, n]`.
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    // 1e-9 absorbs representation error in p*n/100 so exact ranks stay exact
    let rank = ((p * n as f64) / 100.0 - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}
