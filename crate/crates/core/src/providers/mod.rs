//! Uniform interface to every model-backed capability.
//!
//! The pipeline talks to a single [`ModelProvider`]. Two backends exist: a
//! remote chat-completions client ([`RemoteProvider`]) and a deterministic
//! lexical mock ([`MockProvider`]) that makes the whole pipeline runnable
//! offline. [`CapabilityRouter`] sends each capability to its own backend.

mod mock;
mod remote;
mod router;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use mock::MockProvider;
pub use remote::{RemoteConfig, RemoteProvider};
pub use router::{BackendConfig, BackendKind, CapabilityRouter, ProviderConfig};

/// The five model-backed capabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Generate,
    QaExtract,
    AnswerSelect,
    DuplicateScore,
    Entail,
}

impl Capability {
    pub const ALL: [Capability; 5] = [
        Capability::Generate,
        Capability::QaExtract,
        Capability::AnswerSelect,
        Capability::DuplicateScore,
        Capability::Entail,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Capability::Generate => "generate",
            Capability::QaExtract => "qa_extract",
            Capability::AnswerSelect => "answer_select",
            Capability::DuplicateScore => "duplicate_score",
            Capability::Entail => "entail",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("{capability}: timed out after {attempts} attempt(s)")]
    Timeout { capability: Capability, attempts: u32 },
    #[error("{capability}: endpoint answered http status {status}")]
    HttpStatus { capability: Capability, status: u16 },
    #[error("{capability}: could not parse model output: {detail}")]
    ParseFailure { capability: Capability, detail: String },
    #[error("{capability}: transport error: {detail}")]
    Transport { capability: Capability, detail: String },
    #[error("{capability}: provider misconfigured: {detail}")]
    Config { capability: Capability, detail: String },
}

impl ProviderError {
    pub fn capability(&self) -> Capability {
        match self {
            ProviderError::Timeout { capability, .. }
            | ProviderError::HttpStatus { capability, .. }
            | ProviderError::ParseFailure { capability, .. }
            | ProviderError::Transport { capability, .. }
            | ProviderError::Config { capability, .. } => *capability,
        }
    }
}

/// Sampling parameters forwarded to text generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingParams {
    pub temperature: f64,
    /// Nucleus sampling mass, in (0, 1].
    pub top_p: f64,
    pub seed: u64,
    pub max_tokens: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams { temperature: 1.0, top_p: 0.9, seed: 0, max_tokens: 1024 }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(format!("top_p must be in (0, 1], got {}", self.top_p));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be positive".to_string());
        }
        Ok(())
    }

    /// Same parameters with a derived seed, used to draw independent samples.
    pub fn with_seed(self, seed: u64) -> Self {
        SamplingParams { seed, ..self }
    }
}

/// Half-open character range (Unicode scalar values, not bytes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        CharSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QaAnswer {
    pub span: CharSpan,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProviderIdentity {
    pub backend: String,
    pub model: String,
}

impl fmt::Display for ProviderIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.backend, self.model)
    }
}

/// All model-backed capabilities behind one stateless-per-call interface.
///
/// Implementations must be callable from many threads at once. Scores are
/// in `[0, 1]`; spans lie within the passage they were extracted from.
pub trait ModelProvider: Send + Sync {
    fn identity(&self, capability: Capability) -> ProviderIdentity;

    fn generate(&self, prompt: &str, params: &SamplingParams) -> Result<String, ProviderError>;

    /// Extract a short answer to `question` from `passage`, if any.
    fn qa_extract(&self, question: &str, passage: &str) -> Result<Option<QaAnswer>, ProviderError>;

    /// Answer-sentence-selection score: 0 = wrong answer, 1 = correct answer.
    fn answer_select(&self, question: &str, passage: &str) -> Result<f64, ProviderError>;

    /// Likelihood that two questions are duplicates.
    fn duplicate_score(&self, first: &str, second: &str) -> Result<f64, ProviderError>;

    /// Likelihood that `premise` entails `hypothesis`.
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<f64, ProviderError>;
}

/// Reject scores outside `[0, 1]` (or NaN) as parse failures.
pub fn checked_score(capability: Capability, value: f64) -> Result<f64, ProviderError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ProviderError::ParseFailure {
            capability,
            detail: format!("score {value} outside [0, 1]"),
        })
    }
}

/// Reject answers whose span falls outside the passage or whose confidence
/// is out of range.
pub fn checked_answer(passage: &str, answer: Option<QaAnswer>) -> Result<Option<QaAnswer>, ProviderError> {
    let Some(answer) = answer else { return Ok(None) };
    let len = passage.chars().count();
    if answer.span.start > answer.span.end || answer.span.end > len {
        return Err(ProviderError::ParseFailure {
            capability: Capability::QaExtract,
            detail: format!(
                "span {}..{} outside passage of {len} chars",
                answer.span.start, answer.span.end
            ),
        });
    }
    checked_score(Capability::QaExtract, answer.confidence)?;
    Ok(Some(answer))
}
