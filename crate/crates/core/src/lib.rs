//! Spatially-enhanced scene-graph instruction data and scene-graph evaluation.
//!
//! The crate turns images with object annotations and depth maps into
//! layered descriptions, spatial QA, multi-turn reasoning conversations and
//! four-option choice questions, and scores open-vocabulary scene-graph
//! predictions with IoU-matched triplet Recall and mean Recall.

pub mod config;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod geometry;
pub mod llm;
pub mod pipeline;
pub mod scene;
pub mod spatial;
pub mod synthesis;

pub use config::PipelineConfig;
pub use error::{ForgeError, Result};
pub use eval::{
    compute_mean_recall, compute_recall, iou, match_triplets, parse_prediction, score_choice_qa, EvalReport,
    GroundedTriplet, MatchConfig, MatchStrategy, Matching, RecallAccumulator,
};
pub use geometry::{backproject, default_intrinsics, object_z_range, CameraModel, PointSet, Region, ZRange};
pub use llm::{build_prompt, EndpointConfig, LlmClient, PromptTemplate};
pub use pipeline::{analyze_scene, SceneAnalysis, SynthTask};
pub use scene::{
    load_annotations, load_depth, validate_scene, BBox, DepthMap, DepthMode, ImageMeta, ObjectInstance, Rect,
    SceneRecord, Triplet,
};
pub use spatial::{
    assign_layers, covers, derive_2d_relations, group_triplets_by_layer, relation_between, DepthObject, Layer,
    LayerAssignment, RelationKind, SpatialRelation,
};
pub use synthesis::{
    emit_jsonl, gen_conv, gen_qa, render_desc, to_choice_format, ChoiceItem, InstructionRecord, QAItem, QaKind,
    Rewriter, Task,
};
