//! HTTP embedding client.
//!
//! Wire format: `POST endpoint_url` with `{"model": ..., "input": [...]}`,
//! response `{"embeddings": [[...], ...]}` in input order. Inputs are sent in
//! batches of at most `batch_size`. Timeouts, transport failures and 5xx
//! responses are retried `max_retries` times with doubling backoff; 4xx
//! responses fail immediately.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_inputs, Embedder, EmbedderConfig, EmbeddingVector};
use crate::error::{Error, Result};

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

pub struct HttpEmbedder {
    config: EmbedderConfig,
    endpoint: String,
    agent: ureq::Agent,
}

enum Attempt {
    Retry(String),
    Fatal(Error),
}

impl HttpEmbedder {
    pub fn new(config: EmbedderConfig) -> Result<Self> {
        config.validate()?;
        let endpoint = config
            .endpoint_url
            .clone()
            .ok_or_else(|| Error::Config("http embedder requires endpoint_url".into()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            config,
            endpoint,
            agent,
        })
    }

    fn attempt(&self, batch: &[&str]) -> std::result::Result<Vec<Vec<f64>>, Attempt> {
        let body = EmbedRequest {
            model: &self.config.model_name,
            input: batch,
        };
        let mut resp = match self.agent.post(&self.endpoint).send_json(&body) {
            Ok(r) => r,
            Err(e) => return Err(Attempt::Retry(e.to_string())),
        };
        let status = resp.status().as_u16();
        if status >= 500 {
            return Err(Attempt::Retry(format!("server returned {status}")));
        }
        if !(200..300).contains(&status) {
            return Err(Attempt::Fatal(Error::Provider(format!(
                "{} returned {status}",
                self.endpoint
            ))));
        }
        match resp.body_mut().read_json::<EmbedResponse>() {
            Ok(parsed) => Ok(parsed.embeddings),
            Err(ureq::Error::Timeout(t)) => Err(Attempt::Retry(format!("timeout: {t}"))),
            Err(e) => Err(Attempt::Fatal(Error::ContractViolation(format!(
                "unreadable response body: {e}"
            )))),
        }
    }

    fn embed_chunk(&self, batch: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last_err = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                log::debug!("embedding retry {attempt} after {delay:?}: {last_err}");
                thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(batch) {
                Ok(rows) => return self.validate(batch.len(), rows),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => last_err = msg,
            }
        }
        Err(Error::Provider(format!(
            "{} failed after {} attempts: {last_err}",
            self.endpoint,
            self.config.max_retries + 1
        )))
    }

    fn validate(&self, expected: usize, rows: Vec<Vec<f64>>) -> Result<Vec<EmbeddingVector>> {
        if rows.len() != expected {
            return Err(Error::ContractViolation(format!(
                "sent {expected} inputs, got {} embeddings",
                rows.len()
            )));
        }
        rows.into_iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != self.config.dim {
                    return Err(Error::ContractViolation(format!(
                        "embedding {i} has dim {}, expected {}",
                        row.len(),
                        self.config.dim
                    )));
                }
                EmbeddingVector::quantized(row).map_err(|e| Error::ContractViolation(format!("embedding {i}: {e}")))
            })
            .collect()
    }
}

impl Embedder for HttpEmbedder {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        check_inputs(texts)?;
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(self.config.batch_size) {
            out.extend(self.embed_chunk(batch)?);
        }
        Ok(out)
    }
}
