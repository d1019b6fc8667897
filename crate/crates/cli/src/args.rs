use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "forge", version, about = "Spatial scene-graph instruction data toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive spatial relations and depth layers for every scene.
    Extract(ExtractArgs),
    /// Generate instruction-tuning JSONL (desc, qa, conv, choice).
    Synthesize(SynthesizeArgs),
    /// Score model outputs.
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Summarize an annotation set.
    Stats(StatsArgs),
}

/// Flags shared by every command that reads the pipeline config.
#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// TOML pipeline config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: logical CPU count).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct SceneInputArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub depth_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: SceneInputArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory for relations.jsonl and layers.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub input: SceneInputArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory; one JSONL file per task.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated subset of desc, qa, conv, choice.
    #[arg(long, default_value = "desc,qa,conv")]
    pub tasks: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub qa_per_scene: Option<usize>,
    /// Rewrites descriptions through this completion endpoint.
    #[arg(long)]
    pub llm_endpoint: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum EvaluateCommand {
    /// Triplet Recall and mRecall of scene-graph predictions.
    Sgg(EvalSggArgs),
    /// Accuracy of multiple-choice answers.
    Qa(EvalQaArgs),
}

#[derive(Debug, Args)]
pub struct EvalSggArgs {
    /// Ground-truth annotation file.
    #[arg(long)]
    pub annotations: PathBuf,
    /// JSONL of {"image_id", "output"}.
    #[arg(long)]
    pub pred: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Report JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub iou: Option<f64>,
    /// Keep only the first K predicted triplets per image.
    #[arg(long)]
    pub topk: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalQaArgs {
    /// Choice JSONL produced by `forge synthesize --tasks choice`.
    #[arg(long)]
    pub gold: PathBuf,
    /// JSONL of {"id", "answer"} with 0-based choice indices.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    /// With depth maps, also reports layer and relation distributions.
    #[arg(long)]
    pub depth_dir: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// JSON path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
