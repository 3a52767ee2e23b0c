//! Run configuration, read from a single TOML document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use thememap::alignment::TierThresholds;
use thememap::corpus::{CorpusFormat, SegmentationPolicy};
use thememap::lexical::LexicalOptions;
use thememap::primary::LoopConfig;
use thememap::provider::ProviderConfig;
use thememap::secondary::SecondaryConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSettings {
    pub path: PathBuf,
    /// Guessed from the file extension when unset.
    pub format: Option<CorpusFormat>,
}

impl Default for CorpusSettings {
    fn default() -> Self {
        Self {
            path: PathBuf::from("corpus.jsonl"),
            format: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexicalSettings {
    pub bow: LexicalOptions,
    pub ctfidf: LexicalOptions,
    /// Terms per class in the c-TF-IDF tables.
    pub top_terms: usize,
    /// Terms per cell in the term grid.
    pub grid_terms: usize,
}

impl Default for LexicalSettings {
    fn default() -> Self {
        Self {
            bow: LexicalOptions::bow(),
            ctfidf: LexicalOptions::ctfidf(),
            top_terms: 10,
            grid_terms: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSettings {
    /// Normalized shares below this are hidden in the heatmap.
    pub normalize_floor: f64,
    /// Theme ids in heatmap order; global-id order when unset.
    pub heatmap_order: Option<Vec<usize>>,
    pub tiers: TierThresholds,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            normalize_floor: 0.01,
            heatmap_order: None,
            tiers: TierThresholds::default(),
        }
    }
}

/// Offline provider settings used when `stub_mode` is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StubSettings {
    pub embed_dim: usize,
    /// Probability that the stub classifier gives its lexically best answer.
    pub consistency: f64,
}

impl Default for StubSettings {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            consistency: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    /// Root of all randomness; each stage derives its own seed from it.
    pub seed: u64,
    pub stub_mode: bool,
    pub output_dir: PathBuf,
    pub corpus: CorpusSettings,
    pub provider: ProviderConfig,
    pub primary: LoopConfig,
    pub segmentation: SegmentationPolicy,
    pub secondary: SecondaryConfig,
    pub lexical: LexicalSettings,
    pub analysis: AnalysisSettings,
    pub stub: StubSettings,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file. Relative corpus and output paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if config.corpus.path.is_relative() {
            config.corpus.path = base.join(&config.corpus.path);
        }
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        Ok(config)
    }

    /// Offline configuration for a corpus and output directory.
    pub fn stub_defaults(corpus: &Path, output_dir: &Path) -> Self {
        Self {
            stub_mode: true,
            output_dir: output_dir.to_path_buf(),
            corpus: CorpusSettings {
                path: corpus.to_path_buf(),
                format: None,
            },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let config_err = |e: String| CliError::Config(e);
        self.primary.validate().map_err(|e| config_err(e.to_string()))?;
        self.segmentation.validate().map_err(|e| config_err(e.to_string()))?;
        self.lexical.bow.validate().map_err(|e| config_err(e.to_string()))?;
        self.lexical.ctfidf.validate().map_err(|e| config_err(e.to_string()))?;
        self.effective_provider().validate().map_err(|e| config_err(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.stub.consistency) {
            return Err(config_err("stub.consistency must lie in [0, 1]".into()));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(config_err("output_dir is empty".into()));
        }
        Ok(())
    }

    /// Provider settings with the stub dimension applied in stub mode.
    pub fn effective_provider(&self) -> ProviderConfig {
        let mut p = self.provider.clone();
        if self.stub_mode {
            p.embed_dim = self.stub.embed_dim;
        }
        p
    }

    /// Seed for one stage, derived from the root seed and the stage name.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in stage.bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
        }
        splitmix64(self.seed ^ h)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
