use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{NliBackend, NliError, NliPair, NliVerdict};

/// Environment variable holding the sidecar base URL.
pub const NLI_URL_ENV: &str = "SGSACC_NLI_URL";

const CLASSIFY_PATH: &str = "/v1/classify";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    /// Base URL, e.g. `http://127.0.0.1:8700`.
    pub base_url: String,
    pub attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub initial_backoff: Duration,
    pub timeout: Duration,
    /// Pairs per request; larger inputs are split.
    pub max_batch: usize,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(120),
            max_batch: 64,
        }
    }

    /// Reads the base URL from `SGSACC_NLI_URL`.
    pub fn from_env() -> Option<Self> {
        std::env::var(NLI_URL_ENV)
            .ok()
            .filter(|u| !u.trim().is_empty())
            .map(Self::new)
    }

    fn endpoint(&self) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), CLASSIFY_PATH)
    }
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    pairs: &'a [NliPair],
}

#[derive(Deserialize)]
struct ClassifyResponse {
    verdicts: Vec<NliVerdict>,
}

/// HTTP client for the `/v1/classify` endpoint.
pub struct RemoteNli {
    config: RemoteConfig,
    agent: ureq::Agent,
}

enum Attempt {
    Retry(NliError),
    Fatal(NliError),
}

impl RemoteNli {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn send_once(&self, pairs: &[NliPair], attempt: u32) -> Result<Vec<NliVerdict>, Attempt> {
        let mut response = self
            .agent
            .post(&self.config.endpoint())
            .send_json(ClassifyRequest { pairs })
            .map_err(|e| {
                Attempt::Retry(NliError::Transport {
                    attempts: attempt,
                    message: e.to_string(),
                })
            })?;
        let status = response.status().as_u16();
        if status != 200 {
            let err = NliError::Status {
                status,
                attempts: attempt,
            };
            // 503 means the model is still loading; other 5xx may be transient
            return Err(if status >= 500 {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        let body = response.body_mut().read_to_string().map_err(|e| {
            Attempt::Retry(NliError::Transport {
                attempts: attempt,
                message: e.to_string(),
            })
        })?;
        let parsed: ClassifyResponse = serde_json::from_str(&body)
            .map_err(|e| Attempt::Fatal(NliError::Protocol(format!("bad response body: {e}"))))?;
        if parsed.verdicts.len() != pairs.len() {
            return Err(Attempt::Fatal(NliError::Protocol(format!(
                "{} verdicts for {} pairs",
                parsed.verdicts.len(),
                pairs.len()
            ))));
        }
        for v in &parsed.verdicts {
            v.check().map_err(Attempt::Fatal)?;
        }
        Ok(parsed.verdicts)
    }

    fn send_with_retry(&self, pairs: &[NliPair]) -> Result<Vec<NliVerdict>, NliError> {
        let attempts = self.config.attempts.max(1);
        let mut backoff = self.config.initial_backoff;
        let mut attempt = 1;
        loop {
            match self.send_once(pairs, attempt) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) if attempt >= attempts => return Err(e),
                Err(Attempt::Retry(e)) => {
                    log::warn!("NLI request attempt {attempt} failed: {e}; retrying in {backoff:?}");
                    thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

impl NliBackend for RemoteNli {
    fn classify_batch(&self, pairs: &[NliPair]) -> Result<Vec<NliVerdict>, NliError> {
        for p in pairs {
            p.check()?;
        }
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(self.config.max_batch.max(1)) {
            out.extend(self.send_with_retry(chunk)?);
        }
        Ok(out)
    }

    fn identity(&self) -> String {
        format!("remote:{}", self.config.base_url)
    }
}
