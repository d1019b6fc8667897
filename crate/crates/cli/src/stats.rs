use std::collections::BTreeMap;

use forge_core::SceneRecord;
use serde::Serialize;

use crate::args::StatsArgs;
use crate::common::{analyze_all, load_config, load_scenes, split_failures, thread_pool, write_json, CliResult};

#[derive(Serialize, Default)]
struct Stats {
    scenes: usize,
    objects: usize,
    triplets: usize,
    masked_objects: usize,
    labels: BTreeMap<String, usize>,
    predicates: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    depth: Option<DepthStats>,
}

#[derive(Serialize, Default)]
struct DepthStats {
    analyzed: usize,
    failed: usize,
    /// Number of depth layers -> scene count.
    layers_per_scene: BTreeMap<usize, usize>,
    relation_kinds: BTreeMap<String, usize>,
}

fn count_annotations(scenes: &[SceneRecord]) -> Stats {
    let mut s = Stats {
        scenes: scenes.len(),
        ..Default::default()
    };
    for scene in scenes {
        s.objects += scene.objects.len();
        s.triplets += scene.triplets.len();
        for o in &scene.objects {
            *s.labels.entry(o.label.clone()).or_default() += 1;
            s.masked_objects += o.mask.is_some() as usize;
        }
        for t in &scene.triplets {
            *s.predicates.entry(t.predicate.clone()).or_default() += 1;
        }
    }
    s
}

pub fn run(args: &StatsArgs) -> CliResult<()> {
    let scenes = load_scenes(&args.annotations)?;
    let mut stats = count_annotations(&scenes);
    if let Some(depth_dir) = &args.depth_dir {
        let cfg = load_config(&args.config)?;
        let pool = thread_pool(args.config.jobs)?;
        let total = scenes.len();
        let results = analyze_all(&pool, scenes, depth_dir, &cfg, |a| {
            let kinds: Vec<String> = a.relations.iter().map(|r| r.kind.to_string()).collect();
            Ok((a.layers.len(), kinds))
        });
        let ok = split_failures(results, "stats")?;
        let mut d = DepthStats {
            analyzed: ok.len(),
            failed: total - ok.len(),
            ..Default::default()
        };
        for (layers, kinds) in ok {
            *d.layers_per_scene.entry(layers).or_default() += 1;
            for k in kinds {
                *d.relation_kinds.entry(k).or_default() += 1;
            }
        }
        stats.depth = Some(d);
    }
    match &args.out {
        Some(out) => write_json(out, &stats),
        None => {
            println!("{}", serde_json::to_string_pretty(&stats).map_err(forge_core::ForgeError::from)?);
            Ok(())
        }
    }
}
