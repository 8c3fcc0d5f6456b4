use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    checked_answer, checked_score, Capability, MockProvider, ModelProvider, ProviderError,
    ProviderIdentity, QaAnswer, RemoteConfig, RemoteProvider, SamplingParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

/// One backend selection.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub backend: BackendKind,
    pub remote: Option<RemoteConfig>,
}

/// Default backend plus optional per-capability overrides.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub backend: BackendKind,
    pub remote: Option<RemoteConfig>,
    pub capabilities: BTreeMap<Capability, BackendConfig>,
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), String> {
        let check = |kind: BackendKind, remote: &Option<RemoteConfig>, what: &str| {
            if kind == BackendKind::Remote && remote.is_none() {
                Err(format!("{what}: remote backend selected without a [remote] block"))
            } else {
                Ok(())
            }
        };
        check(self.backend, &self.remote, "provider")?;
        for (cap, backend) in &self.capabilities {
            check(backend.backend, &backend.remote, &format!("provider.capabilities.{cap}"))?;
        }
        Ok(())
    }
}

/// Dispatches each capability to its configured backend and enforces score
/// and span ranges on every result.
#[derive(Clone)]
pub struct CapabilityRouter {
    default: Arc<dyn ModelProvider>,
    overrides: BTreeMap<Capability, Arc<dyn ModelProvider>>,
}

impl std::fmt::Debug for CapabilityRouter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut d = f.debug_struct("CapabilityRouter");
        for cap in Capability::ALL {
            d.field(cap.as_str(), &self.route(cap).identity(cap).to_string());
        }
        d.finish()
    }
}

fn build_backend(
    kind: BackendKind,
    remote: &Option<RemoteConfig>,
    seed: u64,
) -> Result<Arc<dyn ModelProvider>, ProviderError> {
    Ok(match kind {
        BackendKind::Mock => Arc::new(MockProvider::new(seed)),
        BackendKind::Remote => {
            let config = remote.clone().ok_or_else(|| ProviderError::Config {
                capability: Capability::Generate,
                detail: "remote backend selected without configuration".to_string(),
            })?;
            Arc::new(RemoteProvider::new(config)?)
        }
    })
}

impl CapabilityRouter {
    pub fn new(default: Arc<dyn ModelProvider>) -> Self {
        CapabilityRouter { default, overrides: BTreeMap::new() }
    }

    pub fn with_override(mut self, capability: Capability, provider: Arc<dyn ModelProvider>) -> Self {
        self.overrides.insert(capability, provider);
        self
    }

    /// Mock backends are seeded with `seed`.
    pub fn from_config(config: &ProviderConfig, seed: u64) -> Result<Self, ProviderError> {
        let mut router = CapabilityRouter::new(build_backend(config.backend, &config.remote, seed)?);
        for (cap, backend) in &config.capabilities {
            router.overrides.insert(*cap, build_backend(backend.backend, &backend.remote, seed)?);
        }
        Ok(router)
    }

    fn route(&self, capability: Capability) -> &dyn ModelProvider {
        self.overrides.get(&capability).unwrap_or(&self.default).as_ref()
    }

    pub fn identities(&self) -> BTreeMap<Capability, ProviderIdentity> {
        Capability::ALL.into_iter().map(|c| (c, self.route(c).identity(c))).collect()
    }
}

impl ModelProvider for CapabilityRouter {
    fn identity(&self, capability: Capability) -> ProviderIdentity {
        self.route(capability).identity(capability)
    }

    fn generate(&self, prompt: &str, params: &SamplingParams) -> Result<String, ProviderError> {
        self.route(Capability::Generate).generate(prompt, params)
    }

    fn qa_extract(&self, question: &str, passage: &str) -> Result<Option<QaAnswer>, ProviderError> {
        let answer = self.route(Capability::QaExtract).qa_extract(question, passage)?;
        checked_answer(passage, answer)
    }

    fn answer_select(&self, question: &str, passage: &str) -> Result<f64, ProviderError> {
        let score = self.route(Capability::AnswerSelect).answer_select(question, passage)?;
        checked_score(Capability::AnswerSelect, score)
    }

    fn duplicate_score(&self, first: &str, second: &str) -> Result<f64, ProviderError> {
        let score = self.route(Capability::DuplicateScore).duplicate_score(first, second)?;
        checked_score(Capability::DuplicateScore, score)
    }

    fn entail(&self, premise: &str, hypothesis: &str) -> Result<f64, ProviderError> {
        let score = self.route(Capability::Entail).entail(premise, hypothesis)?;
        checked_score(Capability::Entail, score)
    }
}
