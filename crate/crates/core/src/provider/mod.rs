//! Embedding and chat-completion access.
//!
//! Providers are trait objects so the pipeline can run against an
//! OpenAI-compatible HTTP endpoint or against the deterministic offline stubs
//! in [`stub`] and [`responder`]. [`embed_texts`] layers the on-disk
//! [`EmbeddingCache`] over any embedding provider; [`chat_complete_structured`]
//! adds tolerant JSON recovery and parse retries over any chat provider.

pub mod cache;
pub mod http;
pub mod json;
pub mod responder;
pub mod stub;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use cache::EmbeddingCache;
pub use http::OpenAiCompatible;
pub use json::SchemaHint;
pub use responder::LexicalResponder;
pub use stub::{stub_embedding, FnChat, ScriptedChat, StubEmbedder, StubEmbeddingMode};

use crate::Embedding;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: usize },
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("provider returned a non-finite embedding")]
    NonFiniteEmbedding,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("no usable reply after {attempts} attempts: {detail}")]
    MalformedReply { attempts: usize, detail: String },
    #[error("empty input")]
    EmptyInput,
    #[error("embedding cache error: {0}")]
    Cache(String),
    #[error("invalid provider configuration: {0}")]
    Config(String),
}

pub type Result<T, E = ProviderError> = std::result::Result<T, E>;

/// Connection and model settings for an OpenAI-compatible provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub base_url: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub embed_model_name: String,
    pub chat_model_name: String,
    pub embed_dim: usize,
    pub max_retries: usize,
    pub request_timeout_secs: u64,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    /// Texts per embedding request.
    pub embed_batch_size: usize,
    /// Concurrent embedding requests.
    pub parallelism: usize,
    /// First backoff delay for transport retries; doubles per attempt.
    pub retry_base_delay_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            embed_model_name: "text-embedding-3-small".into(),
            chat_model_name: "gpt-4o-mini".into(),
            embed_dim: 1536,
            max_retries: 3,
            request_timeout_secs: 120,
            temperature: 0.0,
            max_tokens: None,
            embed_batch_size: 64,
            parallelism: 4,
            retry_base_delay_ms: 500,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim < 2 {
            return Err(ProviderError::Config("embed_dim must be at least 2".into()));
        }
        if self.embed_batch_size == 0 {
            return Err(ProviderError::Config("embed_batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Produces raw embeddings for a batch of texts.
pub trait EmbeddingProvider: Send + Sync {
    /// Identifies the model; part of the cache key.
    fn model_name(&self) -> &str;
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>>;
}

/// Produces a free-text reply for a single-turn prompt.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

/// A chat call together with its verbatim reply and the recovered payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub prompt_text: String,
    pub raw_reply: String,
    pub parsed_payload: Value,
    pub attempt_count: usize,
}

/// Embeds `texts`, consulting `cache` before the provider and storing every
/// fresh vector. Output is aligned with the input.
pub fn embed_texts(
    texts: &[String],
    config: &ProviderConfig,
    cache: &EmbeddingCache,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<Embedding>> {
    config.validate()?;
    if texts.is_empty() || texts.iter().any(|t| t.is_empty()) {
        return Err(ProviderError::EmptyInput);
    }
    let model = provider.model_name().to_string();

    let mut misses: Vec<&String> = Vec::new();
    let mut queued = std::collections::HashSet::new();
    for text in texts {
        if cache.get(&model, text).is_none() && queued.insert(text.as_str()) {
            misses.push(text);
        }
    }

    let batches: Vec<Vec<String>> = misses
        .chunks(config.embed_batch_size)
        .map(|chunk| chunk.iter().map(|s| s.to_string()).collect())
        .collect();
    let mut fresh: HashMap<String, Vec<f64>> = HashMap::new();
    for wave in batches.chunks(config.parallelism.max(1)) {
        let results: Vec<Result<Vec<Vec<f64>>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = wave
                .iter()
                .map(|batch| scope.spawn(move || provider.embed_batch(batch)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(ProviderError::Transport("worker panicked".into())))
                })
                .collect()
        });
        for (batch, result) in wave.iter().zip(results) {
            let vectors = result?;
            if vectors.len() != batch.len() {
                return Err(ProviderError::Transport(format!(
                    "requested {} embeddings, received {}",
                    batch.len(),
                    vectors.len()
                )));
            }
            for (text, vector) in batch.iter().zip(vectors) {
                if vector.len() != config.embed_dim {
                    return Err(ProviderError::DimensionMismatch {
                        expected: config.embed_dim,
                        got: vector.len(),
                    });
                }
                if vector.iter().any(|x| !x.is_finite()) {
                    return Err(ProviderError::NonFiniteEmbedding);
                }
                fresh.insert(text.clone(), vector);
            }
        }
    }
    // Persist in input order so the cache file is reproducible.
    for text in &misses {
        if let Some(vector) = fresh.get(text.as_str()) {
            cache.insert(&model, text, vector.clone())?;
        }
    }

    texts
        .iter()
        .map(|text| {
            cache
                .get(&model, text)
                .map(|v| Embedding::new(v))
                .ok_or_else(|| ProviderError::Cache(format!("missing entry after fill: {text:.40}")))
        })
        .collect()
}

/// Sends `prompt`, recovers a JSON payload of the requested shape, and
/// re-sends the same prompt up to `config.max_retries` times when the reply
/// is unusable.
pub fn chat_complete_structured(
    prompt: &str,
    config: &ProviderConfig,
    schema_hint: SchemaHint,
    provider: &dyn ChatProvider,
) -> Result<ChatExchange> {
    if prompt.trim().is_empty() {
        return Err(ProviderError::EmptyInput);
    }
    let attempts = config.max_retries + 1;
    let mut last_problem = String::new();
    for attempt in 1..=attempts {
        let raw_reply = provider.complete(prompt)?;
        match json::recover_json(&raw_reply).and_then(|v| schema_hint.validate(&v).map(|_| v)) {
            Ok(parsed_payload) => {
                return Ok(ChatExchange {
                    prompt_text: prompt.to_string(),
                    raw_reply,
                    parsed_payload,
                    attempt_count: attempt,
                })
            }
            Err(problem) => {
                log::warn!("attempt {attempt}/{attempts}: unusable {schema_hint:?} reply: {problem}");
                last_problem = problem;
            }
        }
    }
    Err(ProviderError::MalformedReply {
        attempts,
        detail: last_problem,
    })
}
