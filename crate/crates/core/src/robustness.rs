//! Sensitivity of the metric to how a schema is written.
//!
//! Under a schema variant, each action contributes one positive example
//! (ground truth against the action's candidates) and, when negatives
//! exist, one negative example (ground truth against the tampered-value
//! references). Predicting "positive" means some reference is entailed.

use std::fmt;

use serde::Serialize;

use crate::data::{EvalInstance, SchemaCatalog, ValuePool};
use crate::eval::{entails_any, EvalError, PremiseContext};
use crate::nli::NliBackend;
use crate::refs::{build_instance_refs, NegativeOptions, RefError};

#[derive(Debug, thiserror::Error)]
pub enum RobustnessError {
    #[error("variant `{variant}`: {source}")]
    Refs {
        variant: String,
        #[source]
        source: RefError,
    },
    #[error("variant `{variant}`: service `{service}` missing")]
    MissingService { variant: String, service: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, actual_positive: bool, predicted_positive: bool) {
        match (actual_positive, predicted_positive) {
            (true, true) => self.true_pos += 1,
            (true, false) => self.false_neg += 1,
            (false, true) => self.false_pos += 1,
            (false, false) => self.true_neg += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub variant_id: String,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    /// Fractions in [0, 1]; `None` when the denominator is zero.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl RobustnessReport {
    pub fn from_counts(variant_id: impl Into<String>, counts: ConfusionCounts) -> Self {
        let precision = ratio(counts.true_pos, counts.true_pos + counts.false_pos);
        let recall = ratio(counts.true_pos, counts.true_pos + counts.false_neg);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        Self {
            variant_id: variant_id.into(),
            counts,
            precision,
            recall,
            f1,
        }
    }

    /// Precision and recall as percentages with one decimal, F1 with three.
    pub fn formatted(&self) -> (String, String, String) {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{:.1}", v * 100.0));
        (
            pct(self.precision),
            pct(self.recall),
            self.f1.map_or_else(|| "-".to_string(), |v| format!("{v:.3}")),
        )
    }
}

impl fmt::Display for RobustnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, r, f1) = self.formatted();
        write!(f, "{:<24} {:>9} {:>7} {:>8}", self.variant_id, p, r, f1)
    }
}

/// Classifies positive and negative examples built from `variant`.
pub fn run_robustness<B: NliBackend + ?Sized>(
    variant_id: &str,
    instances: &[EvalInstance],
    variant: &SchemaCatalog,
    nli: &B,
    opts: NegativeOptions,
    augmentation: bool,
) -> Result<RobustnessReport, RobustnessError> {
    for inst in instances {
        if variant.service(&inst.service).is_none() {
            return Err(RobustnessError::MissingService {
                variant: variant_id.to_string(),
                service: inst.service.clone(),
            });
        }
    }
    let pool = ValuePool::build(variant, instances);
    let mut counts = ConfusionCounts::default();
    for inst in instances {
        let refs = build_instance_refs(inst, variant, &pool, opts).map_err(|source| {
            RobustnessError::Refs {
                variant: variant_id.to_string(),
                source,
            }
        })?;
        for action_refs in &refs.actions {
            let ctx = augmentation.then(|| PremiseContext::for_action(inst, action_refs));
            let positives: Vec<&str> =
                action_refs.candidates.iter().map(|c| c.text.as_str()).collect();
            counts.record(true, entails_any(nli, &inst.ground_truth, &positives, ctx).map_err(EvalError::from)?);
            if !action_refs.negatives.is_empty() {
                let negatives: Vec<&str> =
                    action_refs.negatives.iter().map(|n| n.text.as_str()).collect();
                counts.record(false, entails_any(nli, &inst.ground_truth, &negatives, ctx).map_err(EvalError::from)?);
            }
        }
    }
    Ok(RobustnessReport::from_counts(variant_id, counts))
}
