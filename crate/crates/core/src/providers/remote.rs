//! Chat-completions HTTP backend.
//!
//! Every capability is a single-message chat request. Scoring capabilities
//! ask for a bare number and parse it strictly; QA asks for a small JSON
//! object whose answer must be a verbatim substring of the passage.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    checked_answer, checked_score, Capability, CharSpan, ModelProvider, ProviderError,
    ProviderIdentity, QaAnswer, SamplingParams,
};
use crate::text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    /// Base URL; requests go to `{endpoint}/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key, if any.
    pub api_key_env: Option<String>,
    pub timeout_ms: u64,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    /// Log (redacted) requests and responses at debug level.
    pub debug_log: bool,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "http://127.0.0.1:8000/v1".to_string(),
            model: "gpt-4".to_string(),
            api_key_env: None,
            timeout_ms: 60_000,
            max_attempts: 3,
            backoff_ms: 500,
            max_in_flight: 4,
            debug_log: false,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct InFlight {
    available: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn new(limit: usize) -> Self {
        InFlight { available: Mutex::new(limit.max(1)), freed: Condvar::new() }
    }

    fn acquire(&self) -> InFlightGuard<'_> {
        let mut available = self.available.lock().expect("in-flight lock poisoned");
        while *available == 0 {
            available = self.freed.wait(available).expect("in-flight lock poisoned");
        }
        *available -= 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().expect("in-flight lock poisoned") += 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug)]
pub struct RemoteProvider {
    config: RemoteConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    in_flight: InFlight,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QaReply {
    answer: Option<String>,
    confidence: f64,
}

enum Attempt {
    Retry(ProviderError),
    Fatal(ProviderError),
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig) -> Result<Self, ProviderError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| ProviderError::Config {
                capability: Capability::Generate,
                detail: format!("environment variable {var} is not set"),
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| ProviderError::Config {
                capability: Capability::Generate,
                detail: e.to_string(),
            })?;
        let in_flight = InFlight::new(config.max_in_flight);
        Ok(RemoteProvider { config, api_key, client, in_flight })
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'))
    }

    fn chat(
        &self,
        capability: Capability,
        prompt: &str,
        params: &SamplingParams,
    ) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
            "seed": params.seed,
        });
        if self.config.debug_log {
            tracing::debug!(%capability, url = %self.url(), prompt = %truncate(prompt, 400), "provider request");
        }
        let attempts = self.config.max_attempts.max(1);
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                let wait = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(wait));
            }
            match self.attempt(capability, &body) {
                Ok(text) => {
                    if self.config.debug_log {
                        tracing::debug!(%capability, response = %truncate(&text, 400), "provider response");
                    }
                    return Ok(text);
                }
                Err(Attempt::Fatal(err)) => return Err(err),
                Err(Attempt::Retry(err)) => {
                    tracing::warn!(%capability, attempt = attempt + 1, error = %err, "provider call failed");
                    last = Some(err);
                }
            }
        }
        Err(match last {
            Some(ProviderError::Timeout { .. }) | None => ProviderError::Timeout { capability, attempts },
            Some(err) => err,
        })
    }

    fn attempt(&self, capability: Capability, body: &serde_json::Value) -> Result<String, Attempt> {
        let _slot = self.in_flight.acquire();
        let mut request = self.client.post(self.url()).json(body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(ProviderError::Timeout { capability, attempts: 1 })
            } else {
                Attempt::Retry(ProviderError::Transport { capability, detail: e.to_string() })
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            let err = ProviderError::HttpStatus { capability, status: status.as_u16() };
            return Err(if status.is_server_error() || status.as_u16() == 429 {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        let parsed: ChatResponse = response.json().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(ProviderError::Timeout { capability, attempts: 1 })
            } else {
                Attempt::Fatal(ProviderError::ParseFailure { capability, detail: e.to_string() })
            }
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| {
                Attempt::Fatal(ProviderError::ParseFailure {
                    capability,
                    detail: "response has no message content".to_string(),
                })
            })
    }

    fn score(&self, capability: Capability, prompt: &str) -> Result<f64, ProviderError> {
        let reply = self.chat(capability, prompt, &scoring_params())?;
        parse_score(capability, &reply)
    }
}

fn scoring_params() -> SamplingParams {
    SamplingParams { temperature: 0.0, top_p: 1.0, seed: 0, max_tokens: 16 }
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}…", &s[..i]),
        None => s.to_string(),
    }
}

/// Strictly parse a bare number in `[0, 1]`.
pub(crate) fn parse_score(capability: Capability, reply: &str) -> Result<f64, ProviderError> {
    let value: f64 = reply.trim().parse().map_err(|_| ProviderError::ParseFailure {
        capability,
        detail: format!("expected a number in [0, 1], got {:?}", truncate(reply.trim(), 40)),
    })?;
    checked_score(capability, value)
}

pub(crate) fn parse_qa(passage: &str, reply: &str) -> Result<Option<QaAnswer>, ProviderError> {
    let capability = Capability::QaExtract;
    let parsed: QaReply = serde_json::from_str(reply.trim()).map_err(|e| ProviderError::ParseFailure {
        capability,
        detail: format!("expected {{\"answer\", \"confidence\"}} JSON: {e}"),
    })?;
    let confidence = checked_score(capability, parsed.confidence)?;
    let Some(answer) = parsed.answer.map(|a| a.trim().to_string()).filter(|a| !a.is_empty()) else {
        return Ok(None);
    };
    let byte = passage.find(&answer).ok_or_else(|| ProviderError::ParseFailure {
        capability,
        detail: "answer is not a verbatim substring of the passage".to_string(),
    })?;
    let start = text::char_offset(passage, byte);
    let span = CharSpan::new(start, start + answer.chars().count());
    checked_answer(passage, Some(QaAnswer { span, confidence }))
}

impl ModelProvider for RemoteProvider {
    fn identity(&self, _capability: Capability) -> ProviderIdentity {
        ProviderIdentity { backend: "remote".to_string(), model: self.config.model.clone() }
    }

    fn generate(&self, prompt: &str, params: &SamplingParams) -> Result<String, ProviderError> {
        self.chat(Capability::Generate, prompt, params)
    }

    fn qa_extract(&self, question: &str, passage: &str) -> Result<Option<QaAnswer>, ProviderError> {
        let prompt = format!(
            "Passage:\n{passage}\n\nQuestion: {question}\n\n\
             Extract the shortest span of the passage that answers the question. \
             Reply with only a JSON object {{\"answer\": <verbatim passage substring or null>, \
             \"confidence\": <number between 0 and 1>}}."
        );
        let params = SamplingParams { max_tokens: 256, ..scoring_params() };
        let reply = self.chat(Capability::QaExtract, &prompt, &params)?;
        parse_qa(passage, &reply)
    }

    fn answer_select(&self, question: &str, passage: &str) -> Result<f64, ProviderError> {
        let prompt = format!(
            "Question: {question}\nCandidate answer passage: {passage}\n\n\
             Does the passage contain a correct answer to the question? Reply with only a number \
             between 0 (incorrect answer) and 1 (correct answer)."
        );
        self.score(Capability::AnswerSelect, &prompt)
    }

    fn duplicate_score(&self, first: &str, second: &str) -> Result<f64, ProviderError> {
        let prompt = format!(
            "Question A: {first}\nQuestion B: {second}\n\n\
             How likely is it that these two questions ask the same thing? Reply with only a number \
             between 0 (different) and 1 (duplicate)."
        );
        self.score(Capability::DuplicateScore, &prompt)
    }

    fn entail(&self, premise: &str, hypothesis: &str) -> Result<f64, ProviderError> {
        let prompt = format!(
            "Premise: {premise}\nHypothesis: {hypothesis}\n\n\
             Is the hypothesis fully supported by the premise? Reply with only a number between \
             0 (not supported) and 1 (entailed)."
        );
        self.score(Capability::Entail, &prompt)
    }
}
