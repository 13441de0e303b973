use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::chain::{DistortionKind, SamplingMode};
use crate::codec::{Codec, CodecConfig, QualityLevel};

pub const DEFAULT_K_LIST: [usize; 2] = [10, 50];
pub const DEFAULT_B: usize = 10;

fn default_k_list() -> Vec<usize> {
    DEFAULT_K_LIST.to_vec()
}

fn default_b() -> usize {
    DEFAULT_B
}

fn default_mode() -> SamplingMode {
    SamplingMode::ForcedMin
}

fn default_distortion() -> DistortionKind {
    DistortionKind::Mse
}

/// Evaluation settings as read from JSON. Unknown fields are rejected.
///
/// `dataset` is a directory of PNM files or `uniform:N[:SEED]`.
/// `q_min_list` defaults to every level of the codec ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub codec: CodecConfig,
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_min_list: Option<Vec<QualityLevel>>,
    #[serde(default = "default_k_list")]
    pub k_list: Vec<usize>,
    #[serde(default = "default_b")]
    pub b: usize,
    #[serde(default = "default_mode")]
    pub mode: SamplingMode,
    #[serde(default = "default_distortion")]
    pub distortion: DistortionKind,
    #[serde(default)]
    pub master_seed: u64,
}

impl EvalConfig {
    pub fn new(codec: CodecConfig, dataset: impl Into<String>) -> Self {
        Self {
            codec,
            dataset: dataset.into(),
            q_min_list: None,
            k_list: default_k_list(),
            b: DEFAULT_B,
            mode: default_mode(),
            distortion: default_distortion(),
            master_seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(text).map_err(|e| ProtocolError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, ProtocolError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProtocolError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fills defaults that depend on the codec and checks every field
    /// against its ladder.
    pub fn resolve(&self, codec: &dyn Codec) -> Result<Self, ProtocolError> {
        let mut cfg = self.clone();
        let q_min_list = cfg
            .q_min_list
            .get_or_insert_with(|| (1..=codec.levels()).map(QualityLevel::new).collect());
        if q_min_list.is_empty() {
            return Err(ProtocolError::Config("q_min_list is empty".into()));
        }
        if let Some(bad) = q_min_list.iter().find(|q| !q.is_valid_for(codec.levels())) {
            return Err(ProtocolError::Config(format!(
                "q_min {bad} outside codec ladder 1..={}",
                codec.levels()
            )));
        }
        if cfg.k_list.is_empty() || cfg.k_list.contains(&0) {
            return Err(ProtocolError::Config(
                "k_list must be nonempty and positive".into(),
            ));
        }
        if cfg.b == 0 {
            return Err(ProtocolError::Config("b must be positive".into()));
        }
        Ok(cfg)
    }
}
