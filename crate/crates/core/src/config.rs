//! Pipeline configuration. Values come from defaults, then a TOML file, then
//! command-line overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::eval::MatchConfig;
use crate::geometry::Rotation;
use crate::llm::EndpointConfig;
use crate::scene::DepthMode;
use crate::synthesis::default_choice_vocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub fov_deg: f64,
    pub trim_pct: f64,
    pub eps_rel: f64,
    pub margin_frac: f64,
    pub depth_scale: f64,
    pub depth_mode: DepthMode,
    #[serde(deserialize_with = "seed_from_int_or_string")]
    pub seed: u64,
    pub topk: Option<usize>,
    pub iou: f64,
    /// Row-major 3x3 applied to backprojected points.
    pub rotation: Option<Rotation>,
    pub qa_per_scene: usize,
    pub choice_vocab: Vec<String>,
    pub llm: EndpointConfig,
}

/// TOML integers are signed 64-bit, so seeds above `i64::MAX` are written as strings.
fn seed_from_int_or_string<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Seed {
        Int(u64),
        Text(String),
    }
    match Seed::deserialize(d)? {
        Seed::Int(v) => Ok(v),
        Seed::Text(s) => s.trim().parse().map_err(serde::de::Error::custom),
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            fov_deg: 60.0,
            trim_pct: 5.0,
            eps_rel: 1e-6,
            margin_frac: 0.05,
            depth_scale: 1.0,
            depth_mode: DepthMode::Linear,
            seed: 0,
            topk: None,
            iou: 0.5,
            rotation: None,
            qa_per_scene: 3,
            choice_vocab: default_choice_vocab(),
            llm: EndpointConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| ForgeError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ForgeError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(ForgeError::Config(what.to_string()))
            }
        };
        check(self.fov_deg > 0.0 && self.fov_deg < 180.0, "fov_deg must lie in (0, 180)")?;
        check((0.0..50.0).contains(&self.trim_pct), "trim_pct must lie in [0, 50)")?;
        check(self.eps_rel >= 0.0 && self.eps_rel.is_finite(), "eps_rel must be finite and >= 0")?;
        check(
            self.margin_frac >= 0.0 && self.margin_frac.is_finite(),
            "margin_frac must be finite and >= 0",
        )?;
        check(
            self.depth_scale > 0.0 && self.depth_scale.is_finite(),
            "depth_scale must be finite and > 0",
        )?;
        check(self.iou > 0.0 && self.iou <= 1.0, "iou must lie in (0, 1]")?;
        check(self.topk != Some(0), "topk must be >= 1 when set")?;
        check(self.qa_per_scene >= 1, "qa_per_scene must be >= 1")?;
        check(self.llm.timeout_ms > 0, "llm.timeout_ms must be > 0")?;
        check(self.llm.concurrency > 0, "llm.concurrency must be > 0")?;
        if let Some(r) = &self.rotation {
            check(r.0.iter().all(|v| v.is_finite()), "rotation entries must be finite")?;
        }
        Ok(())
    }

    pub fn llm_enabled(&self) -> bool {
        !self.llm.url.is_empty()
    }

    pub fn match_config(&self) -> Result<MatchConfig> {
        MatchConfig::with_threshold(self.iou)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(c.fov_deg, 60.0);
        assert_eq!(c.trim_pct, 5.0);
        assert!(!c.llm_enabled());
    }

    #[test]
    fn parses_toml_with_llm_table() {
        let c = PipelineConfig::from_toml_str(
            r#"
            fov_deg = 90.0
            depth_mode = "inverse"
            seed = "18446744073709551615"
            rotation = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
            [llm]
            url = "http://localhost:9000/complete"
            max_retries = 5
            "#,
        )
        .unwrap();
        assert_eq!(c.fov_deg, 90.0);
        assert_eq!(c.depth_mode, DepthMode::Inverse);
        assert_eq!(c.seed, u64::MAX);
        assert_eq!(c.llm.max_retries, 5);
        assert_eq!(c.llm.timeout_ms, 30_000);
        assert!(c.rotation.unwrap().is_identity());
    }

    #[test]
    fn rejects_unknown_and_invalid_keys() {
        assert!(PipelineConfig::from_toml_str("fov = 3.0").is_err());
        assert_eq!(PipelineConfig::from_toml_str("seed = 42").unwrap().seed, 42);
        assert!(PipelineConfig::from_toml_str("seed = -1").is_err());
        assert!(PipelineConfig::from_toml_str("trim_pct = 50.0").is_err());
        assert!(PipelineConfig::from_toml_str("rotation = [1.0, 2.0]").is_err());
    }
}
