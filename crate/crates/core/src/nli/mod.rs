//! Entailment classification.
//!
//! Everything above this module talks to an [`NliBackend`]. Two backends
//! exist: [`RemoteNli`] speaks JSON over HTTP to an inference sidecar, and
//! [`MockNli`] is a deterministic token-overlap rule used for offline runs
//! and tests. [`CachedNli`] wraps either one.

mod cache;
mod mock;
mod remote;

use serde::{Deserialize, Serialize};

pub use cache::CachedNli;
pub use mock::{mock_verdict, MockNli};
pub use remote::{RemoteConfig, RemoteNli, NLI_URL_ENV};

/// Maximum deviation of a verdict's probability sum from 1.
pub const PROBABILITY_TOLERANCE: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum NliError {
    #[error("NLI backend unreachable after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("NLI backend returned HTTP {status} after {attempts} attempt(s)")]
    Status { status: u16, attempts: u32 },
    #[error("NLI protocol violation: {0}")]
    Protocol(String),
    #[error("invalid NLI pair: {0}")]
    InvalidPair(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

/// Probabilities over the three NLI classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliVerdict {
    pub entailment: f64,
    pub neutral: f64,
    pub contradiction: f64,
}

impl NliVerdict {
    /// Rejects probabilities outside [0, 1] or not summing to 1.
    pub fn new(entailment: f64, neutral: f64, contradiction: f64) -> Result<Self, NliError> {
        let v = Self {
            entailment,
            neutral,
            contradiction,
        };
        v.check()?;
        Ok(v)
    }

    pub const ENTAILED: Self = Self { entailment: 1.0, neutral: 0.0, contradiction: 0.0 };
    pub const NEUTRAL: Self = Self { entailment: 0.0, neutral: 1.0, contradiction: 0.0 };
    pub const CONTRADICTED: Self = Self { entailment: 0.0, neutral: 0.0, contradiction: 1.0 };

    pub fn check(&self) -> Result<(), NliError> {
        let parts = [self.entailment, self.neutral, self.contradiction];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(NliError::Protocol(format!(
                "probability outside [0, 1]: {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(NliError::Protocol(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(())
    }

    /// Argmax; ties resolve entailment > neutral > contradiction.
    pub fn label(&self) -> NliLabel {
        if self.entailment >= self.neutral && self.entailment >= self.contradiction {
            NliLabel::Entailment
        } else if self.neutral >= self.contradiction {
            NliLabel::Neutral
        } else {
            NliLabel::Contradiction
        }
    }

    pub fn is_entailment(&self) -> bool {
        self.label() == NliLabel::Entailment
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NliPair {
    pub premise: String,
    pub hypothesis: String,
}

impl NliPair {
    pub fn new(premise: impl Into<String>, hypothesis: impl Into<String>) -> Result<Self, NliError> {
        let pair = Self {
            premise: premise.into(),
            hypothesis: hypothesis.into(),
        };
        pair.check()?;
        Ok(pair)
    }

    fn check(&self) -> Result<(), NliError> {
        if self.premise.trim().is_empty() {
            return Err(NliError::InvalidPair("empty premise".into()));
        }
        if self.hypothesis.trim().is_empty() {
            return Err(NliError::InvalidPair("empty hypothesis".into()));
        }
        Ok(())
    }
}

pub trait NliBackend: Send + Sync {
    /// Verdict `i` answers `pairs[i]`. A failure anywhere fails the whole batch.
    fn classify_batch(&self, pairs: &[NliPair]) -> Result<Vec<NliVerdict>, NliError>;

    fn classify(&self, pair: &NliPair) -> Result<NliVerdict, NliError> {
        let mut out = self.classify_batch(std::slice::from_ref(pair))?;
        out.pop()
            .ok_or_else(|| NliError::Protocol("empty response for single pair".into()))
    }

    /// Short description embedded in reports, e.g. `mock` or `remote:http://...`.
    fn identity(&self) -> String;
}

impl<B: NliBackend + ?Sized> NliBackend for Box<B> {
    fn classify_batch(&self, pairs: &[NliPair]) -> Result<Vec<NliVerdict>, NliError> {
        (**self).classify_batch(pairs)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }
}

impl<B: NliBackend + ?Sized> NliBackend for &B {
    fn classify_batch(&self, pairs: &[NliPair]) -> Result<Vec<NliVerdict>, NliError> {
        (**self).classify_batch(pairs)
    }

    fn identity(&self) -> String {
        (**self).identity()
    }
}
