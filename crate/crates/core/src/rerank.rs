//! Fidelity reranking of an ensemble's generations.
//!
//! Each generation scores one point per dialogue action for which it entails
//! any of the action's candidate references. The ground truth is never
//! consulted. The highest score wins, then the higher log-likelihood, then
//! the earlier candidate.

use std::cmp::Ordering;

use serde::Serialize;

use crate::data::{EvalInstance, GenerationCandidate};
use crate::eval::{entails_any, EvalError, PremiseContext};
use crate::nli::NliBackend;
use crate::refs::InstanceRefs;

pub const ENSEMBLE_SYSTEM_ID: &str = "ensemble";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityScore {
    pub instance_id: String,
    pub system_id: String,
    pub score: usize,
    pub log_likelihood: Option<f64>,
    /// Indices of the actions the generation realizes.
    pub faithful_actions: Vec<usize>,
}

pub fn fidelity_score<B: NliBackend + ?Sized>(
    generation: &GenerationCandidate,
    instance: &EvalInstance,
    refs: &InstanceRefs,
    nli: &B,
    augmentation: bool,
) -> Result<FidelityScore, EvalError> {
    if refs.actions.len() != instance.actions.len() || refs.instance_id != instance.instance_id {
        return Err(EvalError::Internal(format!(
            "references for `{}` do not match instance `{}`",
            refs.instance_id, instance.instance_id
        )));
    }
    let mut faithful_actions = Vec::new();
    for (i, action_refs) in refs.actions.iter().enumerate() {
        let ctx = augmentation.then(|| PremiseContext::for_action(instance, action_refs));
        let hyps: Vec<&str> = action_refs.candidates.iter().map(|c| c.text.as_str()).collect();
        if entails_any(nli, &generation.text, &hyps, ctx)? {
            faithful_actions.push(i);
        }
    }
    Ok(FidelityScore {
        instance_id: generation.instance_id.clone(),
        system_id: generation.system_id.clone(),
        score: faithful_actions.len(),
        log_likelihood: generation.log_likelihood,
        faithful_actions,
    })
}

/// Orders by score, then likelihood; a known likelihood beats a missing one.
fn compare(a: &FidelityScore, b: &FidelityScore) -> Ordering {
    a.score.cmp(&b.score).then_with(|| match (a.log_likelihood, b.log_likelihood) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Greater,
        (None, Some(_)) => Ordering::Less,
        (None, None) => Ordering::Equal,
    })
}

/// Index of the winning score; the first of equal maxima wins.
pub fn select_best(scores: &[FidelityScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        match best {
            Some(b) if compare(s, &scores[b]) != Ordering::Greater => {}
            _ => best = Some(i),
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RerankOutcome {
    pub chosen: GenerationCandidate,
    pub scores: Vec<FidelityScore>,
}

pub fn rerank<B: NliBackend + ?Sized>(
    candidates: &[GenerationCandidate],
    instance: &EvalInstance,
    refs: &InstanceRefs,
    nli: &B,
    augmentation: bool,
) -> Result<RerankOutcome, EvalError> {
    if candidates.is_empty() {
        return Err(EvalError::Internal(format!(
            "no candidates to rerank for `{}`",
            instance.instance_id
        )));
    }
    if let Some(stray) = candidates.iter().find(|c| c.instance_id != instance.instance_id) {
        return Err(EvalError::Internal(format!(
            "candidate for `{}` reranked under `{}`",
            stray.instance_id, instance.instance_id
        )));
    }
    let scores = candidates
        .iter()
        .map(|c| fidelity_score(c, instance, refs, nli, augmentation))
        .collect::<Result<Vec<_>, _>>()?;
    let best = select_best(&scores).expect("non-empty");
    Ok(RerankOutcome {
        chosen: candidates[best].clone(),
        scores,
    })
}

/// A row of the merged ensemble generations file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleGeneration {
    pub instance_id: String,
    pub system_id: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
    pub source_system: String,
    pub fidelity_score: usize,
}

impl EnsembleGeneration {
    pub fn from_outcome(outcome: &RerankOutcome) -> Self {
        let score = outcome
            .scores
            .iter()
            .find(|s| s.system_id == outcome.chosen.system_id)
            .map_or(0, |s| s.score);
        Self {
            instance_id: outcome.chosen.instance_id.clone(),
            system_id: ENSEMBLE_SYSTEM_ID.to_string(),
            text: outcome.chosen.text.clone(),
            log_likelihood: outcome.chosen.log_likelihood,
            source_system: outcome.chosen.system_id.clone(),
            fidelity_score: score,
        }
    }
}
