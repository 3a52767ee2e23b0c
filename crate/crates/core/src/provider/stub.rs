//! Deterministic offline providers.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatProvider, EmbeddingProvider, ProviderError, Result};
use crate::lexical::{tokenize, LexicalOptions};
use crate::Embedding;

/// Hash-derived unit vector for `text`.
///
/// Coordinates come in blocks of four: block `b` is the SHA-256 digest of
/// `seed (u64 LE) || b (u64 LE) || text (UTF-8)`, read as four little-endian
/// `u64`s, each mapped to `[-1, 1)` via its top 53 bits. The result is then
/// scaled to unit length.
pub fn stub_embedding(text: &str, dim: usize, seed: u64) -> Embedding {
    assert!(dim >= 2, "stub embeddings need at least two dimensions");
    let mut values = Vec::with_capacity(dim);
    let mut block = 0u64;
    while values.len() < dim {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(block.to_le_bytes());
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        for chunk in digest.chunks_exact(8) {
            if values.len() == dim {
                break;
            }
            let word = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            values.push((word >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0);
        }
        block += 1;
    }
    unit(values)
}

fn unit(mut values: Vec<f64>) -> Embedding {
    let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|x| *x /= norm);
    } else {
        values[0] = 1.0;
    }
    Embedding::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StubEmbeddingMode {
    /// One hash vector per distinct text: unrelated texts are near-orthogonal.
    WholeText,
    /// Sum of per-token hash vectors: texts sharing vocabulary land close
    /// together, which gives the offline pipeline meaningful clusters.
    #[default]
    BagOfWords,
}

/// Offline embedding provider built on [`stub_embedding`].
pub struct StubEmbedder {
    dim: usize,
    seed: u64,
    mode: StubEmbeddingMode,
    model: String,
    requests: AtomicUsize,
    options: LexicalOptions,
}

impl StubEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self::with_mode(dim, seed, StubEmbeddingMode::WholeText)
    }

    pub fn with_mode(dim: usize, seed: u64, mode: StubEmbeddingMode) -> Self {
        let tag = match mode {
            StubEmbeddingMode::WholeText => "text",
            StubEmbeddingMode::BagOfWords => "bow",
        };
        Self {
            dim,
            seed,
            mode,
            model: format!("stub-{tag}-d{dim}-s{seed}"),
            requests: AtomicUsize::new(0),
            options: LexicalOptions::bow(),
        }
    }

    /// Number of `embed_batch` calls served so far.
    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn embed_one(&self, text: &str) -> Embedding {
        match self.mode {
            StubEmbeddingMode::WholeText => stub_embedding(text, self.dim, self.seed),
            StubEmbeddingMode::BagOfWords => {
                let tokens = tokenize(text, &self.options);
                if tokens.is_empty() {
                    return stub_embedding(text, self.dim, self.seed);
                }
                let mut sum = vec![0.0; self.dim];
                for token in &tokens {
                    let v = stub_embedding(token, self.dim, self.seed);
                    sum.iter_mut().zip(v.values()).for_each(|(s, x)| *s += x);
                }
                unit(sum)
            }
        }
    }
}

impl EmbeddingProvider for StubEmbedder {
    fn model_name(&self) -> &str {
        &self.model
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        Ok(texts.iter().map(|t| self.embed_one(t).0).collect())
    }
}

enum Scripted {
    Reply(String),
    Fail(ProviderError),
}

/// Chat stub that answers from a rule table (first rule whose key occurs in
/// the prompt) and otherwise from a queue consumed in order.
#[derive(Default)]
pub struct ScriptedChat {
    queue: Mutex<VecDeque<Scripted>>,
    rules: Vec<(String, String)>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedChat {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            queue: Mutex::new(replies.into_iter().map(|r| Scripted::Reply(r.into())).collect()),
            ..Default::default()
        }
    }

    pub fn with_rule(mut self, prompt_substring: impl Into<String>, reply: impl Into<String>) -> Self {
        self.rules.push((prompt_substring.into(), reply.into()));
        self
    }

    pub fn push_reply(&self, reply: impl Into<String>) {
        self.queue.lock().expect("queue lock").push_back(Scripted::Reply(reply.into()));
    }

    pub fn push_error(&self, error: ProviderError) {
        self.queue.lock().expect("queue lock").push_back(Scripted::Fail(error));
    }

    /// Every prompt received, in order.
    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt lock").clone()
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().expect("queue lock").len()
    }
}

impl ChatProvider for ScriptedChat {
    fn complete(&self, prompt: &str) -> Result<String> {
        self.prompts.lock().expect("prompt lock").push(prompt.to_string());
        if let Some((_, reply)) = self.rules.iter().find(|(key, _)| prompt.contains(key.as_str())) {
            return Ok(reply.clone());
        }
        match self.queue.lock().expect("queue lock").pop_front() {
            Some(Scripted::Reply(reply)) => Ok(reply),
            Some(Scripted::Fail(err)) => Err(err),
            None => Err(ProviderError::Transport("scripted chat exhausted".into())),
        }
    }
}

/// Adapts a closure into a chat provider.
pub struct FnChat<F>(pub F);

impl<F> ChatProvider for FnChat<F>
where
    F: Fn(&str) -> Result<String> + Send + Sync,
{
    fn complete(&self, prompt: &str) -> Result<String> {
        (self.0)(prompt)
    }
}
