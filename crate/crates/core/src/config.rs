//! Declarative build configuration (TOML). Relative paths resolve against
//! the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::DateStyle;
use crate::providers::{ProviderConfig, SamplingParams};
use crate::summarize::DetailLevel;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{what} not found: {path}")]
    MissingPath { what: &'static str, path: PathBuf },
}

/// Generation sampling knobs; the seed lives at the top level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let d = SamplingParams::default();
        SamplingConfig { temperature: d.temperature, top_p: d.top_p, max_tokens: d.max_tokens }
    }
}

impl SamplingConfig {
    pub fn params(&self, seed: u64) -> SamplingParams {
        SamplingParams { temperature: self.temperature, top_p: self.top_p, seed, max_tokens: self.max_tokens }
    }
}

/// Optional prompt template overrides.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptPaths {
    pub headline: Option<PathBuf>,
    pub questions: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scenario_name: String,
    pub seed: u64,
    pub corpus: Vec<PathBuf>,
    pub bias_csv: Option<PathBuf>,
    /// Externally retrieved articles (same JSONL schema as the corpus).
    pub expansion: Vec<PathBuf>,
    pub output: PathBuf,
    pub weeks: u32,
    pub cluster_threshold: f64,
    /// Clusters smaller than this do not become chapters.
    pub min_cluster_size: usize,
    pub date_style: DateStyle,
    pub n_sets: usize,
    pub dedup_threshold: f64,
    pub sentences_per_snippet: usize,
    pub top_k: usize,
    pub entail_threshold: f64,
    pub detail_levels: Vec<DetailLevel>,
    pub parallelism: usize,
    /// RFC 3339 timestamp; derived from the corpus when absent.
    pub generated_at: Option<String>,
    pub sampling: SamplingConfig,
    pub prompts: PromptPaths,
    pub provider: ProviderConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scenario_name: "Situation report".to_string(),
            seed: 0,
            corpus: Vec::new(),
            bias_csv: None,
            expansion: Vec::new(),
            output: PathBuf::from("report.json"),
            weeks: 2,
            cluster_threshold: 0.8,
            min_cluster_size: 1,
            date_style: DateStyle::PaperColon,
            n_sets: 3,
            dedup_threshold: 0.5,
            sentences_per_snippet: crate::extraction::DEFAULT_SENTENCES_PER_SNIPPET,
            top_k: crate::extraction::DEFAULT_TOP_K,
            entail_threshold: 0.5,
            detail_levels: DetailLevel::ALL.to_vec(),
            parallelism: 4,
            generated_at: None,
            sampling: SamplingConfig::default(),
            prompts: PromptPaths::default(),
            provider: ProviderConfig::default(),
            base_dir: PathBuf::new(),
        }
    }
}

fn in_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<(), ConfigError> {
    if v.is_finite() && (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must be in [{lo}, {hi}], got {v}")))
    }
}

fn positive(name: &str, v: usize) -> Result<(), ConfigError> {
    if v == 0 {
        Err(ConfigError::Invalid(format!("{name} must be positive")))
    } else {
        Ok(())
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut config: PipelineConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_path_buf(), detail: e.to_string() })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    /// Read and validate a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let config = Self::from_toml_str(&text, path)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.weeks == 0 {
            return Err(ConfigError::Invalid("weeks must be positive".into()));
        }
        in_range("cluster_threshold", self.cluster_threshold, 0.0, 2.0)?;
        in_range("dedup_threshold", self.dedup_threshold, 0.0, 1.0)?;
        in_range("entail_threshold", self.entail_threshold, 0.0, 1.0)?;
        positive("min_cluster_size", self.min_cluster_size)?;
        positive("n_sets", self.n_sets)?;
        positive("sentences_per_snippet", self.sentences_per_snippet)?;
        positive("top_k", self.top_k)?;
        positive("parallelism", self.parallelism)?;
        if self.detail_levels.is_empty() {
            return Err(ConfigError::Invalid("detail_levels must not be empty".into()));
        }
        if let Some(ts) = &self.generated_at {
            chrono::DateTime::parse_from_rfc3339(ts)
                .map_err(|e| ConfigError::Invalid(format!("generated_at {ts:?}: {e}")))?;
        }
        self.sampling.params(self.seed).validate().map_err(ConfigError::Invalid)?;
        self.provider.validate().map_err(ConfigError::Invalid)?;
        if self.corpus.is_empty() {
            return Err(ConfigError::Invalid("at least one corpus path is required".into()));
        }
        Ok(())
    }

    /// Fail early, naming the path, if an input file is missing.
    pub fn check_inputs(&self) -> Result<(), ConfigError> {
        let inputs = self
            .corpus
            .iter()
            .map(|p| ("corpus file", p))
            .chain(self.expansion.iter().map(|p| ("expansion file", p)))
            .chain(self.bias_csv.iter().map(|p| ("bias CSV", p)))
            .chain([&self.prompts.headline, &self.prompts.questions, &self.prompts.summary].into_iter().flatten().map(|p| ("prompt template", p)));
        for (what, p) in inputs {
            let path = self.resolve(p);
            if !path.is_file() {
                return Err(ConfigError::MissingPath { what, path });
            }
        }
        Ok(())
    }
}
