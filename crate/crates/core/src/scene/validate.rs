use std::collections::HashSet;
use std::fmt;

use super::SceneRecord;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticSubject {
    Image(u64),
    Object(u64),
    Triplet {
        index: usize,
        subject_id: u64,
        object_id: u64,
    },
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub subject: DiagnosticSubject,
    pub rule: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.subject {
            DiagnosticSubject::Image(id) => write!(f, "image {id}: {}", self.rule),
            DiagnosticSubject::Object(id) => write!(f, "object {id}: {}", self.rule),
            DiagnosticSubject::Triplet {
                index,
                subject_id,
                object_id,
            } => write!(
                f,
                "triplet #{index} ({subject_id} -> {object_id}): {}",
                self.rule
            ),
        }
    }
}

/// Checks every scene-model invariant. An empty list means the scene is well formed.
pub fn validate_scene(scene: &SceneRecord) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let m = &scene.meta;
    let mut push = |subject, rule: String| out.push(Diagnostic { subject, rule });

    if m.width == 0 || m.height == 0 {
        push(
            DiagnosticSubject::Image(m.id),
            format!("image dimensions must be positive, got {}x{}", m.width, m.height),
        );
    }

    let mut ids = HashSet::new();
    for o in &scene.objects {
        let subj = || DiagnosticSubject::Object(o.id);
        if !ids.insert(o.id) {
            push(subj(), "duplicate object id".into());
        }
        if o.image_id != m.id {
            push(subj(), format!("belongs to image {}, not {}", o.image_id, m.id));
        }
        let b = o.bbox;
        if [b.x, b.y, b.w, b.h].iter().any(|v| !v.is_finite()) {
            push(subj(), "bbox has non-finite coordinates".into());
        } else if b.w <= 0.0 || b.h <= 0.0 {
            push(subj(), format!("bbox extent must be positive, got w={} h={}", b.w, b.h));
        } else if b.x < 0.0
            || b.y < 0.0
            || b.x + b.w > m.width as f64
            || b.y + b.h > m.height as f64
        {
            push(subj(), "bbox exceeds image bounds".into());
        }
        if let Some(rle) = &o.mask {
            if rle.width() != m.width || rle.height() != m.height {
                push(
                    subj(),
                    format!(
                        "mask is {}x{}, image is {}x{}",
                        rle.width(),
                        rle.height(),
                        m.width,
                        m.height
                    ),
                );
            } else {
                match rle.decode() {
                    Err(e) => push(subj(), e.to_string()),
                    Ok(mask) if mask.area() == 0 => push(subj(), "mask is empty".into()),
                    Ok(_) => {}
                }
            }
        }
    }

    for (index, t) in scene.triplets.iter().enumerate() {
        let subj = || DiagnosticSubject::Triplet {
            index,
            subject_id: t.subject_id,
            object_id: t.object_id,
        };
        if t.subject_id == t.object_id {
            push(subj(), "subject and object are the same object".into());
        }
        for id in [t.subject_id, t.object_id] {
            if !ids.contains(&id) {
                push(subj(), format!("object {id} does not resolve in this image"));
            }
        }
    }

    if let Some(d) = &scene.depth {
        if d.width != m.width || d.height != m.height {
            push(
                DiagnosticSubject::Image(m.id),
                format!("depth map is {}x{}, image is {}x{}", d.width, d.height, m.width, m.height),
            );
        }
        if d.values.len() != d.width as usize * d.height as usize {
            push(DiagnosticSubject::Image(m.id), "depth grid size mismatch".into());
        }
        if d.values.iter().any(|z| !z.is_finite() || *z < 0.0) {
            push(
                DiagnosticSubject::Image(m.id),
                "depth values must be finite and >= 0".into(),
            );
        }
    }
    out
}
