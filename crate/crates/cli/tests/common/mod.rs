#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use forge_core::fixtures::{random_scene, write_dataset, SceneSpec, SyntheticScene};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn forge<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_forge"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("FORGE_LLM_API_KEY")
        .output()
        .expect("spawn forge")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn synthetic(n: u64, seed: u64) -> Vec<SyntheticScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=n).map(|id| random_scene(&mut rng, id, &SceneSpec::default())).collect()
}

pub struct Dataset {
    pub annotations: PathBuf,
    pub depth_dir: PathBuf,
    pub scenes: Vec<SyntheticScene>,
}

/// Depth maps are stored in centi-units; configs must set `depth_scale = 0.01`.
pub fn dataset(dir: &Path, n: u64, seed: u64) -> Dataset {
    let scenes = synthetic(n, seed);
    let (annotations, depth_dir) = write_dataset(dir, &scenes).unwrap();
    Dataset {
        annotations,
        depth_dir,
        scenes,
    }
}

pub fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("forge.toml");
    std::fs::write(&p, format!("depth_scale = 0.01\n{body}")).unwrap();
    p
}

pub fn lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}
