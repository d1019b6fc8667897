use forge_core::{Layer, RelationKind};
use serde::Serialize;

use crate::args::ExtractArgs;
use crate::common::{analyze_all, create_dir, load_config, load_scenes, split_failures, thread_pool, CliResult, JsonlWriter};

#[derive(Serialize)]
struct RelationLine {
    image_id: u64,
    a: u64,
    b: u64,
    kind: RelationKind,
}

#[derive(Serialize)]
struct LayerLine {
    image_id: u64,
    layers: Vec<Layer>,
}

pub fn run(args: &ExtractArgs) -> CliResult<()> {
    let cfg = load_config(&args.config)?;
    let pool = thread_pool(args.config.jobs)?;
    let scenes = load_scenes(&args.input.annotations)?;
    let results = analyze_all(&pool, scenes, &args.input.depth_dir, &cfg, Ok);
    let analyses = split_failures(results, "extract")?;

    create_dir(&args.out)?;
    let mut relations = JsonlWriter::create(args.out.join("relations.jsonl"))?;
    let mut layers = JsonlWriter::create(args.out.join("layers.jsonl"))?;
    for a in &analyses {
        let image_id = a.scene.meta.id;
        for r in &a.relations {
            relations.write(&RelationLine {
                image_id,
                a: r.a,
                b: r.b,
                kind: r.kind,
            })?;
        }
        layers.write(&LayerLine {
            image_id,
            layers: a.layers.layers.clone(),
        })?;
    }
    relations.finish()?;
    layers.finish()?;
    println!("extract: {} scenes written to {}", analyses.len(), args.out.display());
    Ok(())
}
