use std::collections::BTreeSet;

use forge_core::pipeline::{synthesize_scene, SceneOutputs};
use forge_core::{LlmClient, PipelineConfig, Rewriter, SynthTask};

use crate::args::SynthesizeArgs;
use crate::common::{
    analyze_all, create_dir, load_config, load_scenes, split_failures, thread_pool, CliError, CliResult, JsonlWriter,
};

pub fn parse_tasks(list: &str) -> CliResult<Vec<SynthTask>> {
    let tasks: BTreeSet<SynthTask> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(SynthTask::parse)
        .collect::<forge_core::Result<_>>()?;
    if tasks.is_empty() {
        return Err(CliError::Usage("--tasks must name at least one task".into()));
    }
    Ok(tasks.into_iter().collect())
}

fn effective_config(args: &SynthesizeArgs) -> CliResult<PipelineConfig> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.qa_per_scene {
        cfg.qa_per_scene = n;
    }
    if let Some(url) = &args.llm_endpoint {
        cfg.llm.url = url.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(args: &SynthesizeArgs) -> CliResult<()> {
    let cfg = effective_config(args)?;
    let tasks = parse_tasks(&args.tasks)?;
    let client = if cfg.llm_enabled() {
        Some(LlmClient::new(cfg.llm.clone().with_env_token())?)
    } else {
        None
    };
    // the endpoint's concurrency bound caps the worker pool when rewriting
    let jobs = match (&client, args.config.jobs) {
        (Some(c), Some(j)) => Some(j.min(c.config().concurrency)),
        (Some(c), None) => Some(c.config().concurrency),
        (None, j) => j,
    };
    let pool = thread_pool(jobs)?;
    let scenes = load_scenes(&args.input.annotations)?;
    let rewriter: Option<&(dyn Rewriter + Sync)> = client.as_ref().map(|c| c as _);

    let results = analyze_all(&pool, scenes, &args.input.depth_dir, &cfg, |a| {
        synthesize_scene(&a, &tasks, &cfg, rewriter.map(|r| r as &dyn Rewriter))
    });
    let outputs: Vec<SceneOutputs> = split_failures(results, "synthesize")?;

    create_dir(&args.out)?;
    for &task in &tasks {
        let mut w = JsonlWriter::create(args.out.join(task.file_name()))?;
        let mut count = 0usize;
        for o in &outputs {
            count += match task {
                SynthTask::Desc => write_all(&mut w, &o.desc)?,
                SynthTask::Qa => write_all(&mut w, &o.qa)?,
                SynthTask::Conv => write_all(&mut w, &o.conv)?,
                SynthTask::Choice => write_all(&mut w, &o.choice)?,
            };
        }
        w.finish()?;
        println!("{}: {count} records", task.file_name());
    }
    for w in outputs.iter().flat_map(|o| &o.warnings) {
        log::warn!("{w}");
    }
    Ok(())
}

fn write_all<T: serde::Serialize>(w: &mut JsonlWriter, records: &[T]) -> CliResult<usize> {
    records.iter().try_for_each(|r| w.write(r))?;
    Ok(records.len())
}
