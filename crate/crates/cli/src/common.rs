use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use forge_core::pipeline::{analyze_scene, attach_depth};
use forge_core::{load_annotations, ForgeError, PipelineConfig, SceneAnalysis, SceneRecord};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::ConfigArgs;

/// Maps onto the process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or unreadable inputs: exit 1.
    Usage(String),
    /// Nothing could be processed: exit 2.
    NoInput(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::NoInput(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::NoInput(m) => f.write_str(m),
        }
    }
}

impl From<ForgeError> for CliError {
    fn from(e: ForgeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn load_config(args: &ConfigArgs) -> CliResult<PipelineConfig> {
    Ok(match &args.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    })
}

pub fn thread_pool(jobs: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let n = match jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be >= 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

pub fn load_scenes(path: &Path) -> CliResult<Vec<SceneRecord>> {
    let scenes = load_annotations(path)?;
    if scenes.is_empty() {
        return Err(CliError::NoInput("no scenes".into()));
    }
    Ok(scenes)
}

/// Per-scene outcome; failures never abort the batch.
pub type SceneResult<T> = std::result::Result<T, (u64, ForgeError)>;

/// Runs `work` on every scene inside `pool`; results stay in input order.
pub fn analyze_all<T, F>(
    pool: &rayon::ThreadPool,
    scenes: Vec<SceneRecord>,
    depth_dir: &Path,
    cfg: &PipelineConfig,
    work: F,
) -> Vec<SceneResult<T>>
where
    T: Send,
    F: Fn(SceneAnalysis) -> forge_core::Result<T> + Sync,
{
    pool.install(|| {
        scenes
            .into_par_iter()
            .map(|scene| {
                let id = scene.meta.id;
                attach_depth(scene, depth_dir, cfg)
                    .and_then(|s| analyze_scene(s, cfg))
                    .and_then(&work)
                    .map_err(|e| (id, e))
            })
            .collect()
    })
}

/// Logs per-scene failures and keeps the successes. Zero successes is an error.
pub fn split_failures<T>(results: Vec<SceneResult<T>>, command: &str) -> CliResult<Vec<T>> {
    let total = results.len();
    let mut ok = Vec::with_capacity(total);
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err((id, e)) => log::warn!("image {id}: {e}"),
        }
    }
    let failed = total - ok.len();
    if failed > 0 {
        log::warn!("{command}: {failed} of {total} scenes failed");
    }
    if ok.is_empty() {
        return Err(CliError::NoInput(format!("no scenes processed ({total} failed)")));
    }
    log::info!("{command}: {} scenes processed", ok.len());
    Ok(ok)
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e).into())
}

/// Line-oriented JSON writer.
pub struct JsonlWriter {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: impl Into<PathBuf>) -> CliResult<Self> {
        let path = path.into();
        let file = File::create(&path).map_err(|e| ForgeError::io(&path, e))?;
        Ok(JsonlWriter {
            path,
            inner: BufWriter::new(file),
        })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> CliResult<()> {
        serde_json::to_writer(&mut self.inner, record).map_err(ForgeError::from)?;
        self.inner.write_all(b"\n").map_err(|e| ForgeError::io(&self.path, e))?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.inner.flush().map_err(|e| ForgeError::io(&self.path, e))?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(ForgeError::from)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| ForgeError::io(path, e).into())
}

/// Reads a JSONL file, reporting the 1-based line of the first bad record.
pub fn read_jsonl_lines<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| ForgeError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::Usage(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}
