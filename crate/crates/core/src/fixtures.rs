//! Seeded synthetic scenes: painted depth maps, boxes, optional masks and
//! scene-graph triplets. Used by benchmarks, the acceptance suite and demos.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::geometry::ZRange;
use crate::scene::{save_annotations, write_depth_png, BBox, DepthMap, ImageMeta, Mask, ObjectInstance, Rle, SceneRecord, Triplet};
use crate::spatial::DepthObject;

pub const LABELS: [&str; 20] = [
    "person", "dog", "fence", "tree", "building", "car", "bench", "fire hydrant", "snow", "grass",
    "sky", "cow", "child", "bicycle", "table", "chair", "lamp", "window", "rock", "umbrella",
];

pub const PREDICATES: [&str; 10] = [
    "in front of", "beside", "on", "holding", "looking at", "attached to", "standing on", "near",
    "behind", "over",
];

#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub width: u32,
    pub height: u32,
    pub min_objects: usize,
    pub max_objects: usize,
    pub max_triplets: usize,
    /// Probability that a visible object carries an RLE mask.
    pub mask_prob: f64,
    /// Scene units per stored 16-bit step.
    pub depth_scale: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            width: 96,
            height: 72,
            min_objects: 2,
            max_objects: 8,
            max_triplets: 8,
            mask_prob: 0.3,
            depth_scale: 0.01,
        }
    }
}

/// A synthetic scene with its raw 16-bit depth values.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub scene: SceneRecord,
    pub raw_depth: Vec<u16>,
}

/// Paints objects far-to-near onto a far background so nearer objects occlude.
pub fn random_scene<R: Rng>(rng: &mut R, id: u64, spec: &SceneSpec) -> SyntheticScene {
    let (w, h) = (spec.width, spec.height);
    let n = rng.gen_range(spec.min_objects..=spec.max_objects);
    let background: u16 = 6000;
    let mut raw = vec![background; (w * h) as usize];

    struct Draft {
        bbox: BBox,
        near: u16,
        slope: f64,
    }
    let mut drafts: Vec<Draft> = (0..n)
        .map(|_| {
            let bw = rng.gen_range(4..=w / 2);
            let bh = rng.gen_range(4..=h / 2);
            let x = rng.gen_range(0..=w - bw);
            let y = rng.gen_range(0..=h - bh);
            Draft {
                bbox: BBox::new(x as f64, y as f64, bw as f64, bh as f64),
                near: rng.gen_range(100..4500),
                slope: rng.gen_range(0.0..40.0),
            }
        })
        .collect();
    drafts.sort_by_key(|d| std::cmp::Reverse(d.near));

    let mut owner: Vec<Option<usize>> = vec![None; (w * h) as usize];
    for (k, d) in drafts.iter().enumerate() {
        let (cols, rows) = d.bbox.pixel_span(w, h);
        for v in rows {
            for u in cols.clone() {
                let du = u as f64 - d.bbox.x;
                let z = d.near as f64 + d.slope * du;
                raw[(v * w + u) as usize] = z.round().clamp(1.0, 65535.0) as u16;
                owner[(v * w + u) as usize] = Some(k);
            }
        }
    }

    let mut labels: Vec<&str> = LABELS.to_vec();
    labels.shuffle(rng);
    let objects: Vec<ObjectInstance> = drafts
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let mut mask = None;
            if rng.gen_bool(spec.mask_prob) {
                let mut m = Mask::empty(w, h);
                for (i, o) in owner.iter().enumerate() {
                    if *o == Some(k) {
                        m.bits[i] = true;
                    }
                }
                if m.area() > 0 {
                    mask = Some(Rle::encode(&m));
                }
            }
            ObjectInstance {
                id: id * 1000 + k as u64 + 1,
                image_id: id,
                // occasional duplicate labels, as in real data
                label: labels[if rng.gen_bool(0.1) { 0 } else { k % labels.len() }].to_string(),
                bbox: d.bbox,
                mask,
            }
        })
        .collect();

    let mut seen = BTreeSet::new();
    let mut triplets = Vec::new();
    let want = rng.gen_range(1..=spec.max_triplets.max(1));
    for _ in 0..want * 3 {
        if triplets.len() >= want {
            break;
        }
        let s = rng.gen_range(0..n);
        let o = rng.gen_range(0..n);
        if s == o {
            continue;
        }
        let p = *PREDICATES.choose(rng).expect("nonempty");
        if seen.insert((s, p, o)) {
            triplets.push(Triplet::new(objects[s].id, p, objects[o].id));
        }
    }

    let depth = DepthMap::new(w, h, raw.iter().map(|&v| v as f64 * spec.depth_scale).collect())
        .expect("grid sized to image");
    SyntheticScene {
        scene: SceneRecord {
            meta: ImageMeta {
                id,
                file_name: format!("{id:06}.jpg"),
                width: w,
                height: h,
                depth_file: format!("{id:06}.png"),
            },
            objects,
            triplets,
            depth: Some(depth),
        },
        raw_depth: raw,
    }
}

/// `n` objects with random integer-grid z-ranges in `[0, 100]`.
pub fn random_depth_objects<R: Rng>(rng: &mut R, n: usize) -> Vec<DepthObject> {
    (0..n)
        .map(|i| {
            let a = rng.gen_range(0..=100) as f64;
            let b = rng.gen_range(0..=100) as f64;
            DepthObject::new(i as u64, ZRange::new(a.min(b), a.max(b)).expect("ordered"))
        })
        .collect()
}

/// Writes `annotations.json` and one depth PNG per scene into `dir`.
/// Returns `(annotation path, depth dir)`.
pub fn write_dataset(dir: impl AsRef<Path>, scenes: &[SyntheticScene]) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    let depth_dir = dir.join("depth");
    std::fs::create_dir_all(&depth_dir).map_err(|e| crate::error::ForgeError::io(&depth_dir, e))?;
    for s in scenes {
        let m = &s.scene.meta;
        write_depth_png(depth_dir.join(&m.depth_file), m.width, m.height, &s.raw_depth)?;
    }
    let ann = dir.join("annotations.json");
    let records: Vec<SceneRecord> = scenes.iter().map(|s| s.scene.clone()).collect();
    save_annotations(&records, &ann)?;
    Ok((ann, depth_dir))
}
