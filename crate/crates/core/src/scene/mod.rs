//! Scene model: images, annotated objects, scene-graph triplets and depth maps.

mod annotations;
mod depth;
pub mod rle;
mod validate;

use serde::{Deserialize, Serialize};

pub use annotations::{load_annotations, parse_annotations, save_annotations, to_annotation_file};
pub use annotations::{AnnotationFile, CategoryEntry, ImageEntry, ObjectEntry, RelationEntry};
pub use depth::{load_depth, write_depth_png, DepthMode};
pub use rle::{Mask, Rle, RleCounts};
pub use validate::{validate_scene, Diagnostic, DiagnosticSubject};

use crate::error::{ForgeError, Result};

/// Lowercases and collapses runs of whitespace to a single space.
///
/// Every label and predicate passes through this once at ingest so all
/// downstream comparisons share the same form.
pub fn normalize_label(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    pub depth_file: String,
}

/// Axis-aligned box in COCO convention: top-left corner plus extent, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for BBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        BBox { x, y, w, h }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn to_rect(&self) -> Rect {
        Rect::new(self.x, self.y, self.x + self.w, self.y + self.h)
    }

    /// Integer pixel grid covered by this box, clipped to `width`x`height`.
    /// Returns half-open column and row ranges.
    pub fn pixel_span(&self, width: u32, height: u32) -> (std::ops::Range<u32>, std::ops::Range<u32>) {
        let clip = |lo: f64, hi: f64, max: u32| {
            let lo = lo.floor().max(0.0).min(max as f64) as u32;
            let hi = hi.ceil().max(0.0).min(max as f64) as u32;
            lo..hi.max(lo)
        };
        (
            clip(self.x, self.x + self.w, width),
            clip(self.y, self.y + self.h, height),
        )
    }
}

/// Corner-form box `[x1, y1, x2, y2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rect {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl From<[f64; 4]> for Rect {
    fn from([x1, y1, x2, y2]: [f64; 4]) -> Self {
        Rect { x1, y1, x2, y2 }
    }
}

impl From<Rect> for [f64; 4] {
    fn from(r: Rect) -> Self {
        [r.x1, r.y1, r.x2, r.y2]
    }
}

impl Rect {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Rect { x1, y1, x2, y2 }
    }

    pub fn is_valid(&self) -> bool {
        self.x1 < self.x2 && self.y1 < self.y2
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1).max(0.0) * (self.y2 - self.y1).max(0.0)
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = self.x2.min(other.x2) - self.x1.max(other.x1);
        let h = self.y2.min(other.y2) - self.y1.max(other.y1);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: u64,
    pub image_id: u64,
    pub label: String,
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Rle>,
}

impl ObjectInstance {
    /// Decoded mask, if the object carries one.
    pub fn decode_mask(&self) -> Result<Option<Mask>> {
        self.mask.as_ref().map(Rle::decode).transpose()
    }

    /// Tight box of the mask when present, otherwise the annotated bbox.
    pub fn extent(&self) -> Result<Rect> {
        match self.decode_mask()? {
            Some(mask) => mask.tight_rect().ok_or_else(|| {
                ForgeError::Mask(format!("object {} has an empty mask", self.id))
            }),
            None => Ok(self.bbox.to_rect()),
        }
    }

    /// Pixel area: mask area when present, bbox area otherwise.
    pub fn area(&self) -> Result<f64> {
        Ok(match self.decode_mask()? {
            Some(mask) => mask.area() as f64,
            None => self.bbox.area(),
        })
    }

    /// Region centroid: mask pixel centroid when present, bbox center otherwise.
    pub fn centroid(&self) -> Result<(f64, f64)> {
        match self.decode_mask()? {
            Some(mask) => mask.centroid().ok_or_else(|| {
                ForgeError::Mask(format!("object {} has an empty mask", self.id))
            }),
            None => Ok(self.bbox.center()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub subject_id: u64,
    pub predicate: String,
    pub object_id: u64,
}

impl Triplet {
    pub fn new(subject_id: u64, predicate: impl Into<String>, object_id: u64) -> Self {
        Triplet {
            subject_id,
            predicate: predicate.into(),
            object_id,
        }
    }
}

/// Row-major grid of non-negative depth values.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(ForgeError::InvalidParameter {
                name: "values",
                message: format!(
                    "expected {} values for {}x{}, got {}",
                    width as usize * height as usize,
                    width,
                    height,
                    values.len()
                ),
            });
        }
        Ok(DepthMap {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: u32, height: u32, value: f64) -> Self {
        DepthMap {
            width,
            height,
            values: vec![value; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> f64 {
        self.values[v as usize * self.width as usize + u as usize]
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, z: f64) {
        let w = self.width as usize;
        self.values[v as usize * w + u as usize] = z;
    }

    /// Every value multiplied by `s`.
    pub fn scaled(&self, s: f64) -> DepthMap {
        DepthMap {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|z| z * s).collect(),
        }
    }
}

/// One image with its objects, triplets and (once loaded) depth map.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRecord {
    pub meta: ImageMeta,
    pub objects: Vec<ObjectInstance>,
    pub triplets: Vec<Triplet>,
    pub depth: Option<DepthMap>,
}

impl SceneRecord {
    pub fn object(&self, id: u64) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn with_depth(mut self, depth: DepthMap) -> Self {
        self.depth = Some(depth);
        self
    }

    pub fn depth(&self) -> Result<&DepthMap> {
        self.depth.as_ref().ok_or(ForgeError::Empty("scene has no depth map attached"))
    }
}
