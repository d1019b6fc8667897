//! Pairwise spatial relations and near-to-far layer decomposition.
//!
//! An object's depth range *covers* another's when it strictly encloses it on
//! both ends. Objects that cover nothing are the basic objects; each heads one
//! layer whose members are the objects covering it. Layers are ordered by the
//! basic object's nearest depth.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::geometry::ZRange;
use crate::scene::{ObjectInstance, Rect, Triplet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    InFrontOf,
    Behind,
    Covers,
    CoveredBy,
    Above,
    Below,
    LeftOf,
    RightOf,
    LargerThan,
    SmallerThan,
    Occludes,
    OccludedBy,
    SameDepth,
}

impl RelationKind {
    pub const ALL: [RelationKind; 13] = [
        RelationKind::InFrontOf,
        RelationKind::Behind,
        RelationKind::Covers,
        RelationKind::CoveredBy,
        RelationKind::Above,
        RelationKind::Below,
        RelationKind::LeftOf,
        RelationKind::RightOf,
        RelationKind::LargerThan,
        RelationKind::SmallerThan,
        RelationKind::Occludes,
        RelationKind::OccludedBy,
        RelationKind::SameDepth,
    ];

    pub fn inverse(self) -> RelationKind {
        use RelationKind::*;
        match self {
            InFrontOf => Behind,
            Behind => InFrontOf,
            Covers => CoveredBy,
            CoveredBy => Covers,
            Above => Below,
            Below => Above,
            LeftOf => RightOf,
            RightOf => LeftOf,
            LargerThan => SmallerThan,
            SmallerThan => LargerThan,
            Occludes => OccludedBy,
            OccludedBy => Occludes,
            SameDepth => SameDepth,
        }
    }

    /// Whether this kind is one of the mutually exclusive depth-axis verdicts.
    pub fn is_depth(self) -> bool {
        use RelationKind::*;
        matches!(self, InFrontOf | Behind | Covers | CoveredBy | SameDepth)
    }

    /// English phrase used between two noun phrases ("the cup is `in front of` the plate").
    pub fn phrase(self) -> &'static str {
        use RelationKind::*;
        match self {
            InFrontOf => "in front of",
            Behind => "behind",
            Covers => "spanning the depth of",
            CoveredBy => "within the depth span of",
            Above => "above",
            Below => "below",
            LeftOf => "to the left of",
            RightOf => "to the right of",
            LargerThan => "larger than",
            SmallerThan => "smaller than",
            Occludes => "occluding",
            OccludedBy => "occluded by",
            SameDepth => "at the same depth as",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpatialRelation {
    pub kind: RelationKind,
    pub a: u64,
    pub b: u64,
}

impl SpatialRelation {
    pub fn new(kind: RelationKind, a: u64, b: u64) -> Self {
        SpatialRelation { kind, a, b }
    }

    pub fn inverse(&self) -> SpatialRelation {
        SpatialRelation::new(self.kind.inverse(), self.b, self.a)
    }
}

/// An object id with its depth range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthObject {
    pub id: u64,
    pub range: ZRange,
}

impl DepthObject {
    pub fn new(id: u64, range: ZRange) -> Self {
        DepthObject { id, range }
    }
}

/// Strict interval nesting: `a` starts nearer and ends farther than `b`.
#[inline]
pub fn covers(a: &ZRange, b: &ZRange) -> bool {
    a.z_min < b.z_min && a.z_max > b.z_max
}

/// Depth-axis relation of `a` to `b`.
///
/// Coverage wins; otherwise midpoints within `eps` are the same depth and the
/// nearer midpoint is in front.
pub fn relation_between(a: &DepthObject, b: &DepthObject, eps: f64) -> SpatialRelation {
    let kind = if covers(&a.range, &b.range) {
        RelationKind::Covers
    } else if covers(&b.range, &a.range) {
        RelationKind::CoveredBy
    } else {
        let delta = a.range.midpoint() - b.range.midpoint();
        if delta.abs() <= eps {
            RelationKind::SameDepth
        } else if delta < 0.0 {
            RelationKind::InFrontOf
        } else {
            RelationKind::Behind
        }
    };
    SpatialRelation::new(kind, a.id, b.id)
}

/// Per-object quantities needed for image-plane relations, computed once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectGeometry {
    pub id: u64,
    pub range: ZRange,
    pub centroid: (f64, f64),
    pub area: f64,
    pub bbox: Rect,
}

impl ObjectGeometry {
    pub fn from_instance(obj: &ObjectInstance, range: ZRange) -> Result<Self> {
        Ok(ObjectGeometry {
            id: obj.id,
            range,
            centroid: obj.centroid()?,
            area: obj.area()?,
            bbox: obj.bbox.to_rect(),
        })
    }

    pub fn depth(&self) -> DepthObject {
        DepthObject::new(self.id, self.range)
    }
}

/// Image-plane relations of `a` to `b`: left/right, above/below, size and occlusion.
///
/// Directional relations require a centroid gap larger than `margin_frac` of
/// the image extent on that axis. `a` occludes `b` when their boxes overlap
/// and `a`'s depth midpoint is more than `eps` nearer.
pub fn derive_2d_relations(
    a: &ObjectGeometry,
    b: &ObjectGeometry,
    image_size: (u32, u32),
    margin_frac: f64,
    eps: f64,
) -> Vec<SpatialRelation> {
    use RelationKind::*;
    let mut out = Vec::new();
    let mut emit = |kind| out.push(SpatialRelation::new(kind, a.id, b.id));
    let mx = margin_frac * image_size.0 as f64;
    let my = margin_frac * image_size.1 as f64;
    let dx = b.centroid.0 - a.centroid.0;
    let dy = b.centroid.1 - a.centroid.1;

    if dx > mx {
        emit(LeftOf);
    } else if -dx > mx {
        emit(RightOf);
    }
    if dy > my {
        emit(Above);
    } else if -dy > my {
        emit(Below);
    }
    if a.area > b.area {
        emit(LargerThan);
    } else if a.area < b.area {
        emit(SmallerThan);
    }
    if a.bbox.intersection_area(&b.bbox) > 0.0 {
        let gap = b.range.midpoint() - a.range.midpoint();
        if gap > eps {
            emit(Occludes);
        } else if -gap > eps {
            emit(OccludedBy);
        }
    }
    out
}

/// `eps_rel` times the span between the nearest and farthest object depth.
pub fn scene_eps(objects: &[DepthObject], eps_rel: f64) -> f64 {
    let lo = objects.iter().map(|o| o.range.z_min).fold(f64::INFINITY, f64::min);
    let hi = objects.iter().map(|o| o.range.z_max).fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() && hi.is_finite() {
        eps_rel * (hi - lo)
    } else {
        0.0
    }
}

/// Every relation over every ordered pair of distinct objects.
pub fn extract_relations(
    objects: &[ObjectGeometry],
    image_size: (u32, u32),
    margin_frac: f64,
    eps: f64,
) -> Vec<SpatialRelation> {
    let mut out = Vec::new();
    for a in objects {
        for b in objects {
            if a.id == b.id {
                continue;
            }
            out.push(relation_between(&a.depth(), &b.depth(), eps));
            out.extend(derive_2d_relations(a, b, image_size, margin_frac, eps));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub basic: u64,
    pub members: Vec<u64>,
    pub depth_key: f64,
}

impl Layer {
    pub fn contains(&self, id: u64) -> bool {
        self.basic == id || self.members.contains(&id)
    }

    /// Basic object first, then members.
    pub fn objects(&self) -> impl Iterator<Item = u64> + '_ {
        std::iter::once(self.basic).chain(self.members.iter().copied())
    }
}

/// Layers ordered near to far.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LayerAssignment {
    pub layers: Vec<Layer>,
}

impl LayerAssignment {
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Index of the nearest layer containing `id`.
    pub fn nearest_layer_of(&self, id: u64) -> Option<usize> {
        self.layers.iter().position(|l| l.contains(id))
    }
}

/// Splits objects into near-to-far layers headed by covers-minimal objects.
///
/// Ties on the basic object's `z_min` break by ascending id. Members keep the
/// input order.
pub fn assign_layers(objects: &[DepthObject]) -> Result<LayerAssignment> {
    if objects.is_empty() {
        return Err(ForgeError::Empty("object list for layering"));
    }
    let mut basics: Vec<&DepthObject> = objects
        .iter()
        .filter(|a| !objects.iter().any(|b| covers(&a.range, &b.range)))
        .collect();
    basics.sort_by(|x, y| {
        x.range
            .z_min
            .total_cmp(&y.range.z_min)
            .then(x.id.cmp(&y.id))
    });
    let layers = basics
        .into_iter()
        .map(|basic| Layer {
            basic: basic.id,
            members: objects
                .iter()
                .filter(|b| covers(&b.range, &basic.range))
                .map(|b| b.id)
                .collect(),
            depth_key: basic.range.z_min,
        })
        .collect();
    Ok(LayerAssignment { layers })
}

/// Triplets per layer index, each placed in the nearest layer holding its subject.
pub fn group_triplets_by_layer(triplets: &[Triplet], layers: &LayerAssignment) -> Result<Vec<Vec<Triplet>>> {
    let mut grouped = vec![Vec::new(); layers.len()];
    for t in triplets {
        let unresolved = |reason: String| ForgeError::UnresolvedTriplet {
            subject_id: t.subject_id,
            predicate: t.predicate.clone(),
            object_id: t.object_id,
            reason,
        };
        let idx = layers
            .nearest_layer_of(t.subject_id)
            .ok_or_else(|| unresolved(format!("subject {} is in no layer", t.subject_id)))?;
        if layers.nearest_layer_of(t.object_id).is_none() {
            return Err(unresolved(format!("object {} is in no layer", t.object_id)));
        }
        grouped[idx].push(t.clone());
    }
    Ok(grouped)
}
