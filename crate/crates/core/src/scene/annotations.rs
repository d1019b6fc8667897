use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{normalize_label, BBox, ImageMeta, ObjectInstance, Rle, SceneRecord, Triplet};
use crate::error::{ForgeError, Result};

/// On-disk annotation schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationFile {
    pub images: Vec<ImageEntry>,
    pub categories: Vec<CategoryEntry>,
    pub objects: Vec<ObjectEntry>,
    #[serde(default)]
    pub relations: Vec<RelationEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    pub depth_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryEntry {
    pub id: u64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Rle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationEntry {
    pub image_id: u64,
    pub subject_id: u64,
    pub object_id: u64,
    pub predicate: String,
}

/// Reads an annotation file into one depth-less scene per image, sorted by image id.
pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<SceneRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ForgeError::io(path, e))?;
    parse_annotations(&text)
}

pub fn parse_annotations(text: &str) -> Result<Vec<SceneRecord>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: AnnotationFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        ForgeError::Schema {
            field,
            message: e.into_inner().to_string(),
        }
    })?;
    build_scenes(file)
}

fn build_scenes(file: AnnotationFile) -> Result<Vec<SceneRecord>> {
    let mut categories = HashMap::new();
    for c in &file.categories {
        if categories.insert(c.id, normalize_label(&c.name)).is_some() {
            return Err(ForgeError::Duplicate {
                kind: "category",
                id: c.id,
            });
        }
    }

    let mut scenes: BTreeMap<u64, SceneRecord> = BTreeMap::new();
    for img in file.images {
        let id = img.id;
        let scene = SceneRecord {
            meta: ImageMeta {
                id: img.id,
                file_name: img.file_name,
                width: img.width,
                height: img.height,
                depth_file: img.depth_file,
            },
            objects: Vec::new(),
            triplets: Vec::new(),
            depth: None,
        };
        if scenes.insert(id, scene).is_some() {
            return Err(ForgeError::Duplicate { kind: "image", id });
        }
    }

    let mut object_image: HashMap<u64, u64> = HashMap::new();
    for obj in file.objects {
        let label = categories.get(&obj.category_id).ok_or_else(|| ForgeError::Dangling {
            kind: "category",
            detail: format!("object {} references category_id {}", obj.id, obj.category_id),
        })?;
        let scene = scenes.get_mut(&obj.image_id).ok_or_else(|| ForgeError::Dangling {
            kind: "image",
            detail: format!("object {} references image_id {}", obj.id, obj.image_id),
        })?;
        if object_image.insert(obj.id, obj.image_id).is_some() {
            return Err(ForgeError::Duplicate {
                kind: "object",
                id: obj.id,
            });
        }
        scene.objects.push(ObjectInstance {
            id: obj.id,
            image_id: obj.image_id,
            label: label.clone(),
            bbox: obj.bbox,
            mask: obj.mask,
        });
    }

    for rel in file.relations {
        let scene = scenes.get_mut(&rel.image_id).ok_or_else(|| ForgeError::Dangling {
            kind: "image",
            detail: format!("relation references image_id {}", rel.image_id),
        })?;
        for id in [rel.subject_id, rel.object_id] {
            if object_image.get(&id) != Some(&rel.image_id) {
                return Err(ForgeError::Dangling {
                    kind: "object",
                    detail: format!(
                        "dangling object reference: relation ({}, {}, {}) in image {} names object {}",
                        rel.subject_id, rel.predicate, rel.object_id, rel.image_id, id
                    ),
                });
            }
        }
        scene.triplets.push(Triplet {
            subject_id: rel.subject_id,
            predicate: normalize_label(&rel.predicate),
            object_id: rel.object_id,
        });
    }

    Ok(scenes.into_values().collect())
}

/// Inverse of ingestion: categories are numbered 1.. in sorted label order.
pub fn to_annotation_file(scenes: &[SceneRecord]) -> AnnotationFile {
    let labels: BTreeSet<&str> = scenes
        .iter()
        .flat_map(|s| s.objects.iter().map(|o| o.label.as_str()))
        .collect();
    let category_ids: HashMap<&str, u64> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (*l, i as u64 + 1))
        .collect();
    let mut seen = HashSet::new();
    let mut file = AnnotationFile {
        images: Vec::new(),
        categories: labels
            .iter()
            .map(|l| CategoryEntry {
                id: category_ids[l],
                name: l.to_string(),
            })
            .collect(),
        objects: Vec::new(),
        relations: Vec::new(),
    };
    for scene in scenes {
        if !seen.insert(scene.meta.id) {
            continue;
        }
        let m = &scene.meta;
        file.images.push(ImageEntry {
            id: m.id,
            file_name: m.file_name.clone(),
            width: m.width,
            height: m.height,
            depth_file: m.depth_file.clone(),
        });
        file.objects.extend(scene.objects.iter().map(|o| ObjectEntry {
            id: o.id,
            image_id: o.image_id,
            category_id: category_ids[o.label.as_str()],
            bbox: o.bbox,
            mask: o.mask.clone(),
        }));
        file.relations.extend(scene.triplets.iter().map(|t| RelationEntry {
            image_id: m.id,
            subject_id: t.subject_id,
            object_id: t.object_id,
            predicate: t.predicate.clone(),
        }));
    }
    file
}

pub fn save_annotations(scenes: &[SceneRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&to_annotation_file(scenes))?;
    std::fs::write(path, text).map_err(|e| ForgeError::io(path, e))
}
