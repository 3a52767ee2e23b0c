//! OpenAI-compatible REST client.
//!
//! Embeddings: `POST {base_url}/embeddings` with `{"model", "input": [..]}`,
//! vectors read from `data[].embedding` ordered by `data[].index`.
//! Chat: `POST {base_url}/chat/completions` with a single user message; the
//! reply is `choices[0].message.content`.

use std::time::Duration;

use serde_json::{json, Value};
use ureq::Agent;

use super::{ChatProvider, EmbeddingProvider, ProviderConfig, ProviderError, Result};

/// Longest wait honored from a `Retry-After` header.
const MAX_RETRY_AFTER: Duration = Duration::from_secs(120);

pub struct OpenAiCompatible {
    config: ProviderConfig,
    api_key: String,
    agent: Agent,
}

impl OpenAiCompatible {
    /// Reads the bearer token from the environment variable named in `config`.
    pub fn from_env(config: ProviderConfig) -> Result<Self> {
        let key = std::env::var(&config.api_key_env).map_err(|_| {
            ProviderError::AuthFailure(format!(
                "environment variable {} is not set",
                config.api_key_env
            ))
        })?;
        Self::new(config, key)
    }

    pub fn new(config: ProviderConfig, api_key: impl Into<String>) -> Result<Self> {
        config.validate()?;
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.request_timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            config,
            api_key: api_key.into(),
            agent,
        })
    }

    fn endpoint(&self, path: &str) -> String {
        format!("{}/{}", self.config.base_url.trim_end_matches('/'), path)
    }

    fn backoff(&self, attempt: usize) -> Duration {
        Duration::from_millis(self.config.retry_base_delay_ms.saturating_mul(1 << attempt.min(10)))
    }

    /// POSTs a JSON body, retrying rate limits, server errors and transport
    /// failures up to `max_retries` times.
    fn post(&self, path: &str, body: &Value) -> Result<Value> {
        let url = self.endpoint(path);
        let attempts = self.config.max_retries + 1;
        let mut rate_limited = false;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                log::debug!("retrying {url} (attempt {})", attempt + 1);
            }
            let response = self
                .agent
                .post(&url)
                .header("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(body);
            let mut response = match response {
                Ok(r) => r,
                Err(e) => {
                    last_error = e.to_string();
                    rate_limited = false;
                    std::thread::sleep(self.backoff(attempt));
                    continue;
                }
            };
            let status = response.status().as_u16();
            match status {
                200..=299 => {
                    return response
                        .body_mut()
                        .read_json::<Value>()
                        .map_err(|e| ProviderError::Transport(format!("invalid JSON body: {e}")));
                }
                401 | 403 => {
                    let detail = response.body_mut().read_to_string().unwrap_or_default();
                    return Err(ProviderError::AuthFailure(format!("HTTP {status}: {detail}")));
                }
                429 => {
                    rate_limited = true;
                    let wait = response
                        .headers()
                        .get("retry-after")
                        .and_then(|v| v.to_str().ok())
                        .and_then(|v| v.trim().parse::<f64>().ok())
                        .filter(|s| s.is_finite() && *s >= 0.0)
                        .map(Duration::from_secs_f64)
                        .unwrap_or_else(|| self.backoff(attempt))
                        .min(MAX_RETRY_AFTER);
                    if attempt + 1 < attempts {
                        std::thread::sleep(wait);
                    }
                }
                500..=599 => {
                    rate_limited = false;
                    last_error = format!("HTTP {status}");
                    if attempt + 1 < attempts {
                        std::thread::sleep(self.backoff(attempt));
                    }
                }
                _ => {
                    let detail = response.body_mut().read_to_string().unwrap_or_default();
                    return Err(ProviderError::Transport(format!("HTTP {status}: {detail}")));
                }
            }
        }
        if rate_limited {
            Err(ProviderError::RateLimited { attempts })
        } else {
            Err(ProviderError::Transport(last_error))
        }
    }
}

impl EmbeddingProvider for OpenAiCompatible {
    fn model_name(&self) -> &str {
        &self.config.embed_model_name
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let body = json!({
            "model": self.config.embed_model_name,
            "input": texts,
        });
        let reply = self.post("embeddings", &body)?;
        let data = reply
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::Transport("embedding reply without `data`".into()))?;
        let mut indexed: Vec<(usize, Vec<f64>)> = Vec::with_capacity(data.len());
        for (pos, item) in data.iter().enumerate() {
            let index = item
                .get("index")
                .and_then(Value::as_u64)
                .map(|i| i as usize)
                .unwrap_or(pos);
            let vector = item
                .get("embedding")
                .and_then(Value::as_array)
                .ok_or_else(|| ProviderError::Transport("entry without `embedding`".into()))?
                .iter()
                .map(|x| x.as_f64().ok_or(ProviderError::NonFiniteEmbedding))
                .collect::<Result<Vec<f64>>>()?;
            indexed.push((index, vector));
        }
        indexed.sort_by_key(|(i, _)| *i);
        Ok(indexed.into_iter().map(|(_, v)| v).collect())
    }
}

impl ChatProvider for OpenAiCompatible {
    fn complete(&self, prompt: &str) -> Result<String> {
        let mut body = json!({
            "model": self.config.chat_model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });
        if let Some(max_tokens) = self.config.max_tokens {
            body["max_tokens"] = json!(max_tokens);
        }
        let reply = self.post("chat/completions", &body)?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Transport("chat reply without message content".into()))
    }
}
