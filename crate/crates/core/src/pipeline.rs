//! Per-scene orchestration: depth -> points -> z-ranges -> relations -> layers,
//! and the per-scene synthesis bundle built on top.

use std::path::Path;

use crate::config::PipelineConfig;
use crate::error::{ForgeError, Result};
use crate::geometry::{backproject, default_intrinsics, object_z_range, Region, Rotation};
use crate::scene::{load_depth, validate_scene, SceneRecord, Triplet};
use crate::spatial::{
    assign_layers, extract_relations, group_triplets_by_layer, scene_eps, DepthObject, LayerAssignment,
    ObjectGeometry, SpatialRelation,
};
use crate::synthesis::{
    derive_seed, gen_conv, gen_qa, qa_record, render_desc, to_choice_format, ChoiceItem, InstructionRecord,
    Rewriter, Task,
};

/// Everything spatial derived for one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneAnalysis {
    pub scene: SceneRecord,
    pub objects: Vec<ObjectGeometry>,
    pub eps: f64,
    pub relations: Vec<SpatialRelation>,
    pub layers: LayerAssignment,
    pub grouped: Vec<Vec<Triplet>>,
}

/// Attaches the depth map named by the scene's metadata.
pub fn attach_depth(scene: SceneRecord, depth_dir: impl AsRef<Path>, cfg: &PipelineConfig) -> Result<SceneRecord> {
    let depth = load_depth(&scene.meta, depth_dir, cfg.depth_scale, cfg.depth_mode)?;
    Ok(scene.with_depth(depth))
}

pub fn analyze_scene(scene: SceneRecord, cfg: &PipelineConfig) -> Result<SceneAnalysis> {
    let diagnostics = validate_scene(&scene);
    if !diagnostics.is_empty() {
        return Err(ForgeError::Schema {
            field: format!("image {}", scene.meta.id),
            message: diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
        });
    }
    let depth = scene.depth()?;
    let cam = default_intrinsics(scene.meta.width, scene.meta.height, cfg.fov_deg)?;
    let rotation = cfg.rotation.unwrap_or(Rotation::IDENTITY);

    let mut objects = Vec::with_capacity(scene.objects.len());
    for obj in &scene.objects {
        let mask = obj.decode_mask()?;
        let region = match &mask {
            Some(m) => Region::Mask(m),
            None => Region::BBox(obj.bbox),
        };
        let points = backproject(depth, &cam, region, obj.id)?.rotated(&rotation);
        let range = object_z_range(&points, cfg.trim_pct)?;
        objects.push(ObjectGeometry::from_instance(obj, range)?);
    }

    let depth_objects: Vec<DepthObject> = objects.iter().map(ObjectGeometry::depth).collect();
    let eps = scene_eps(&depth_objects, cfg.eps_rel);
    let relations = extract_relations(&objects, (scene.meta.width, scene.meta.height), cfg.margin_frac, eps);
    let layers = assign_layers(&depth_objects)?;
    let grouped = group_triplets_by_layer(&scene.triplets, &layers)?;
    Ok(SceneAnalysis {
        scene,
        objects,
        eps,
        relations,
        layers,
        grouped,
    })
}

/// Records produced for one scene.
#[derive(Debug, Default)]
pub struct SceneOutputs {
    pub desc: Vec<InstructionRecord>,
    pub qa: Vec<InstructionRecord>,
    pub conv: Vec<InstructionRecord>,
    pub choice: Vec<ChoiceItem>,
    /// Non-fatal per-item problems (unrealizable QA, choice conversion errors).
    pub warnings: Vec<String>,
}

pub fn synthesize_scene(
    analysis: &SceneAnalysis,
    tasks: &[SynthTask],
    cfg: &PipelineConfig,
    rewriter: Option<&dyn Rewriter>,
) -> Result<SceneOutputs> {
    let scene = &analysis.scene;
    let mut out = SceneOutputs::default();
    let wants = |t: SynthTask| tasks.contains(&t);

    if wants(SynthTask::Desc) {
        out.desc.push(render_desc(scene, &analysis.layers, &analysis.grouped, rewriter));
    }
    if wants(SynthTask::Qa) || wants(SynthTask::Choice) {
        let qa_seed = derive_seed(cfg.seed, scene.meta.id);
        let batch = gen_qa(scene, &analysis.relations, cfg.qa_per_scene, qa_seed);
        if batch.shortfall > 0 {
            out.warnings.push(format!(
                "image {}: {} of {} QA items unrealizable",
                scene.meta.id, batch.shortfall, cfg.qa_per_scene
            ));
        }
        if wants(SynthTask::Qa) {
            out.qa.extend(batch.items.iter().map(qa_record));
        }
        if wants(SynthTask::Choice) {
            for (k, item) in batch.items.iter().enumerate() {
                match to_choice_format(item, &cfg.choice_vocab, derive_seed(qa_seed, k as u64 + 1)) {
                    Ok(c) => out.choice.push(c),
                    Err(e) => out.warnings.push(format!("{}: {e}", item.id)),
                }
            }
        }
    }
    if wants(SynthTask::Conv) {
        out.conv.push(gen_conv(scene, &analysis.relations, &analysis.layers)?);
    }
    Ok(out)
}

/// Output families of `forge synthesize`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SynthTask {
    Desc,
    Qa,
    Conv,
    Choice,
}

impl SynthTask {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "desc" => Ok(SynthTask::Desc),
            "qa" => Ok(SynthTask::Qa),
            "conv" => Ok(SynthTask::Conv),
            "choice" => Ok(SynthTask::Choice),
            other => Err(ForgeError::Config(format!(
                "unknown task {other:?} (expected desc, qa, conv or choice)"
            ))),
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            SynthTask::Desc => "desc.jsonl",
            SynthTask::Qa => "qa.jsonl",
            SynthTask::Conv => "conv.jsonl",
            SynthTask::Choice => "choice.jsonl",
        }
    }

    pub fn instruction_task(self) -> Option<Task> {
        match self {
            SynthTask::Desc => Some(Task::Desc),
            SynthTask::Qa => Some(Task::Qa),
            SynthTask::Conv => Some(Task::Conv),
            SynthTask::Choice => None,
        }
    }
}
