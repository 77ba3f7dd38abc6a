//! Faithfulness checking of generated utterances against dialogue actions.
//!
//! For every action, the candidate reference most strongly entailed by the
//! ground-truth utterance becomes the entailment reference. A generation
//! realizes the action when it entails that reference. When the bare
//! utterance does not, the check is repeated once on a premise augmented
//! with the previous turn and the slot description.

mod metrics;

use serde::Serialize;

use crate::data::{EvalInstance, GenerationCandidate, SchemaCatalog};
use crate::nli::{NliBackend, NliError, NliPair, NliVerdict};
use crate::refs::{ActionRefs, CandidateReference, InstanceRefs};

pub use metrics::{
    check_slots, compute_ser, compute_sgsacc, metric_report, BucketCounts, MetricReport,
    SlotCheck, SlotErrorRate, Triple,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Nli(#[from] NliError),
    #[error("internal: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EvalOptions {
    /// Retry on the augmented premise when the bare one is not entailing.
    pub augmentation: bool,
    pub validation: bool,
    /// Case-sensitive value matching for slot error rate.
    pub exact_case_ser: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            augmentation: true,
            validation: true,
            exact_case_ser: false,
        }
    }
}

/// Dialogue context used to augment a premise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PremiseContext<'a> {
    pub previous_turn: Option<&'a str>,
    pub slot_description: Option<&'a str>,
}

impl<'a> PremiseContext<'a> {
    pub fn for_action(instance: &'a EvalInstance, refs: &'a ActionRefs) -> Self {
        Self {
            previous_turn: instance.previous_turn.as_deref(),
            slot_description: refs.slot_description.as_deref(),
        }
    }

    fn is_empty(&self) -> bool {
        self.previous_turn.is_none_or(|p| p.trim().is_empty())
            && self.slot_description.is_none_or(|d| d.trim().is_empty())
    }
}

/// `"{previous_turn} {slot_description}. {utterance}"`, skipping absent parts.
pub fn augment_premise(
    utterance: &str,
    previous_turn: Option<&str>,
    slot_description: Option<&str>,
) -> String {
    let mut parts: Vec<String> = Vec::with_capacity(3);
    if let Some(prev) = previous_turn.map(str::trim).filter(|p| !p.is_empty()) {
        parts.push(prev.to_string());
    }
    if let Some(desc) = slot_description
        .map(|d| d.trim().trim_end_matches('.').trim_end())
        .filter(|d| !d.is_empty())
    {
        parts.push(format!("{desc}."));
    }
    parts.push(utterance.trim().to_string());
    parts.join(" ")
}

fn classify_all<B: NliBackend + ?Sized>(
    nli: &B,
    premise: &str,
    hypotheses: impl Iterator<Item = impl Into<String>>,
) -> Result<Vec<NliVerdict>, NliError> {
    let pairs = hypotheses
        .map(|h| NliPair::new(premise, h))
        .collect::<Result<Vec<_>, _>>()?;
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    nli.classify_batch(&pairs)
}

/// Verdicts of `utterance` against each hypothesis, re-scored on the
/// augmented premise when none is entailed on the bare one.
///
/// Returns the verdicts actually used and whether augmentation was consulted.
pub(crate) fn score_with_fallback<B: NliBackend + ?Sized>(
    nli: &B,
    utterance: &str,
    hypotheses: &[&str],
    context: Option<PremiseContext<'_>>,
) -> Result<(Vec<NliVerdict>, bool), NliError> {
    let bare = classify_all(nli, utterance, hypotheses.iter().copied())?;
    if bare.iter().any(NliVerdict::is_entailment) {
        return Ok((bare, false));
    }
    match context.filter(|c| !c.is_empty()) {
        Some(ctx) => {
            let premise = augment_premise(utterance, ctx.previous_turn, ctx.slot_description);
            let augmented = classify_all(nli, &premise, hypotheses.iter().copied())?;
            Ok((augmented, true))
        }
        None => Ok((bare, false)),
    }
}

/// Whether `utterance` entails any hypothesis, bare or augmented.
pub(crate) fn entails_any<B: NliBackend + ?Sized>(
    nli: &B,
    utterance: &str,
    hypotheses: &[&str],
    context: Option<PremiseContext<'_>>,
) -> Result<bool, NliError> {
    if hypotheses.is_empty() {
        return Ok(false);
    }
    let (verdicts, _) = score_with_fallback(nli, utterance, hypotheses, context)?;
    Ok(verdicts.iter().any(NliVerdict::is_entailment))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedReference {
    pub reference: CandidateReference,
    /// Entailment probability of the winning candidate.
    pub score: f64,
    pub used_augmented_premise: bool,
}

/// Picks the candidate with the highest entailment probability against the
/// ground truth. Earlier candidates win ties.
pub fn select_entailment_reference<B: NliBackend + ?Sized>(
    candidates: &[CandidateReference],
    ground_truth: &str,
    context: Option<PremiseContext<'_>>,
    nli: &B,
) -> Result<SelectedReference, EvalError> {
    if candidates.is_empty() {
        return Err(EvalError::Internal("no candidate references".into()));
    }
    let hyps: Vec<&str> = candidates.iter().map(|c| c.text.as_str()).collect();
    let (verdicts, used_augmented_premise) =
        score_with_fallback(nli, ground_truth, &hyps, context)?;
    let mut best = 0;
    for (i, v) in verdicts.iter().enumerate().skip(1) {
        if v.entailment > verdicts[best].entailment {
            best = i;
        }
    }
    Ok(SelectedReference {
        reference: candidates[best].clone(),
        score: verdicts[best].entailment,
        used_augmented_premise,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActionValidation {
    pub action_index: usize,
    pub candidate_entailed: bool,
    /// Negative references the ground truth entails.
    pub entailed_negatives: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationOutcome {
    pub instance_id: String,
    pub passed: bool,
    pub failed_positive: bool,
    pub failed_negative: bool,
    pub actions: Vec<ActionValidation>,
}

/// Ground truth must entail some candidate of every action and no negative.
pub fn validate_instance<B: NliBackend + ?Sized>(
    instance: &EvalInstance,
    refs: &InstanceRefs,
    nli: &B,
    augmentation: bool,
) -> Result<ValidationOutcome, EvalError> {
    check_refs(instance, refs)?;
    let mut actions = Vec::with_capacity(refs.actions.len());
    for (action_index, action_refs) in refs.actions.iter().enumerate() {
        let ctx = augmentation.then(|| PremiseContext::for_action(instance, action_refs));
        let hyps: Vec<&str> = action_refs.candidates.iter().map(|c| c.text.as_str()).collect();
        let candidate_entailed = entails_any(nli, &instance.ground_truth, &hyps, ctx)?;
        let mut entailed_negatives = Vec::new();
        for neg in &action_refs.negatives {
            if entails_any(nli, &instance.ground_truth, &[neg.text.as_str()], ctx)? {
                entailed_negatives.push(neg.text.clone());
            }
        }
        actions.push(ActionValidation {
            action_index,
            candidate_entailed,
            entailed_negatives,
        });
    }
    let failed_positive = actions.iter().any(|a| !a.candidate_entailed);
    let failed_negative = actions.iter().any(|a| !a.entailed_negatives.is_empty());
    Ok(ValidationOutcome {
        instance_id: instance.instance_id.clone(),
        passed: !failed_positive && !failed_negative,
        failed_positive,
        failed_negative,
        actions,
    })
}

fn check_refs(instance: &EvalInstance, refs: &InstanceRefs) -> Result<(), EvalError> {
    if refs.instance_id != instance.instance_id || refs.actions.len() != instance.actions.len() {
        return Err(EvalError::Internal(format!(
            "references for `{}` do not match instance `{}`",
            refs.instance_id, instance.instance_id
        )));
    }
    Ok(())
}

/// Per-instance state shared by every system: selected references and the
/// validation outcome. Depends only on the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreparedInstance {
    pub instance_id: String,
    pub selected: Vec<SelectedReference>,
    pub validation: Option<ValidationOutcome>,
}

impl PreparedInstance {
    pub fn validated(&self) -> bool {
        self.validation.as_ref().is_none_or(|v| v.passed)
    }
}

pub fn prepare_instance<B: NliBackend + ?Sized>(
    instance: &EvalInstance,
    refs: &InstanceRefs,
    nli: &B,
    opts: EvalOptions,
) -> Result<PreparedInstance, EvalError> {
    check_refs(instance, refs)?;
    let selected = refs
        .actions
        .iter()
        .map(|a| {
            let ctx = opts.augmentation.then(|| PremiseContext::for_action(instance, a));
            select_entailment_reference(&a.candidates, &instance.ground_truth, ctx, nli)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let validation = if opts.validation {
        Some(validate_instance(instance, refs, nli, opts.augmentation)?)
    } else {
        None
    };
    Ok(PreparedInstance {
        instance_id: instance.instance_id.clone(),
        selected,
        validation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionAssessment {
    pub action_index: usize,
    pub entailment_reference: CandidateReference,
    pub faithful: bool,
    pub used_augmented_premise: bool,
    pub verdict: NliVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceResult {
    pub instance_id: String,
    pub system_id: String,
    pub is_unseen_domain: bool,
    pub assessments: Vec<ActionAssessment>,
    pub instance_faithful: bool,
    pub validated: bool,
    /// `None` when the instance has no valued non-categorical slot.
    pub slot_error: Option<bool>,
    pub slot_checks: Vec<SlotCheck>,
}

/// Checks one generation against the prepared entailment references.
pub fn evaluate_instance<B: NliBackend + ?Sized>(
    generation: &GenerationCandidate,
    instance: &EvalInstance,
    refs: &InstanceRefs,
    prepared: &PreparedInstance,
    catalog: &SchemaCatalog,
    nli: &B,
    opts: EvalOptions,
) -> Result<InstanceResult, EvalError> {
    if generation.instance_id != instance.instance_id || prepared.instance_id != instance.instance_id
    {
        return Err(EvalError::Internal(format!(
            "generation for `{}` evaluated against instance `{}`",
            generation.instance_id, instance.instance_id
        )));
    }
    check_refs(instance, refs)?;
    if prepared.selected.len() != refs.actions.len() {
        return Err(EvalError::Internal(format!(
            "missing selected references for `{}`",
            instance.instance_id
        )));
    }
    let mut assessments = Vec::with_capacity(refs.actions.len());
    for (action_index, (action_refs, selected)) in
        refs.actions.iter().zip(&prepared.selected).enumerate()
    {
        let ctx = opts
            .augmentation
            .then(|| PremiseContext::for_action(instance, action_refs));
        let (verdicts, used_augmented_premise) = score_with_fallback(
            nli,
            &generation.text,
            &[selected.reference.text.as_str()],
            ctx,
        )?;
        let verdict = verdicts[0];
        assessments.push(ActionAssessment {
            action_index,
            entailment_reference: selected.reference.clone(),
            faithful: verdict.is_entailment(),
            used_augmented_premise,
            verdict,
        });
    }
    let (slot_error, slot_checks) =
        check_slots(&generation.text, instance, catalog, opts.exact_case_ser);
    Ok(InstanceResult {
        instance_id: instance.instance_id.clone(),
        system_id: generation.system_id.clone(),
        is_unseen_domain: instance.is_unseen_domain,
        instance_faithful: assessments.iter().all(|a| a.faithful),
        assessments,
        validated: prepared.validated(),
        slot_error,
        slot_checks,
    })
}
