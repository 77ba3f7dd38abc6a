//! Rule-based construction of entailment hypotheses from dialogue actions.
//!
//! Every action becomes a small set of candidate sentences built from the
//! slot description and the slot name. Which templates apply depends on the
//! intent (REQUEST, GOODBYE and REQ_MORE are special, everything else is
//! treated like INFORM) and on whether the slot is boolean.
//!
//! Negative references come from the same templates applied to an action
//! whose value has been replaced by a wrong one.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{DialogueAction, EvalInstance, SchemaCatalog, SlotSchema, ValuePool};

pub const DEFAULT_NEGATIVES_PER_SLOT: usize = 3;

const GOODBYE: [&str; 3] = ["Have a good day.", "Bye bye.", "See you."];
const REQ_MORE: [&str; 3] = [
    "What else do you need?",
    "What else can I help you with?",
    "Is there anything else?",
];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RefError {
    #[error("{intent} action requires a slot schema")]
    MissingSlot { intent: String },
    #[error("{intent}({slot}) carries no value")]
    MissingValue { intent: String, slot: String },
    #[error("boolean slot `{slot}` has value outside {{True, False}}: {values:?}")]
    ValueDomain { slot: String, values: Vec<String> },
    #[error("instance `{instance_id}`: slot `{slot}` not found in service `{service}`")]
    UnknownSlot {
        instance_id: String,
        service: String,
        slot: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateReference {
    pub text: String,
    pub rule_id: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NegativeReference {
    pub text: String,
    pub tampered_value: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NegativeOptions {
    pub per_slot: usize,
    pub seed: u64,
}

impl Default for NegativeOptions {
    fn default() -> Self {
        Self {
            per_slot: DEFAULT_NEGATIVES_PER_SLOT,
            seed: 0,
        }
    }
}

/// `kids_friendly` -> `kids friendly`.
pub fn normalize_slot_name(slot: &str) -> String {
    slot.split(|c: char| c == '_' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Description text with surrounding whitespace and trailing punctuation removed.
fn clean_description(desc: &str) -> String {
    desc.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .trim_end_matches(['.', '?', '!', ',', ';', ':'])
        .trim_end()
        .to_string()
}

/// Capitalizes the first letter and guarantees terminal punctuation.
fn finish(sentence: &str) -> String {
    let collapsed = sentence.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut chars = collapsed.chars();
    let mut out = match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect::<String>(),
        None => String::new(),
    };
    if !out.ends_with(['.', '?', '!']) {
        out.push('.');
    }
    out
}

fn join_values(values: &[String]) -> String {
    match values {
        [] => String::new(),
        [only] => only.clone(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

struct Builder {
    out: Vec<CandidateReference>,
}

impl Builder {
    fn push(&mut self, rule_id: &'static str, sentence: String) {
        let text = finish(&sentence);
        if !self.out.iter().any(|c| c.text == text) {
            self.out.push(CandidateReference { text, rule_id });
        }
    }
}

fn is_special(intent: &str) -> bool {
    matches!(intent, "REQUEST" | "GOODBYE" | "REQ_MORE")
}

/// Builds the candidate references for one action, description-based
/// sentences first, then name-based ones, then auxiliary-verb variants.
pub fn build_candidates(
    action: &DialogueAction,
    slot_schema: Option<&SlotSchema>,
) -> Result<Vec<CandidateReference>, RefError> {
    let mut b = Builder { out: Vec::new() };
    match action.intent.as_str() {
        "GOODBYE" => {
            for s in GOODBYE {
                b.push("goodbye", s.to_string());
            }
            return Ok(b.out);
        }
        "REQ_MORE" => {
            for s in REQ_MORE {
                b.push("req_more", s.to_string());
            }
            return Ok(b.out);
        }
        _ => {}
    }

    let slot = slot_schema.ok_or_else(|| RefError::MissingSlot {
        intent: action.intent.clone(),
    })?;
    let name = normalize_slot_name(&slot.name);
    let desc = clean_description(&slot.description);

    if action.intent == "REQUEST" {
        if !desc.is_empty() {
            b.push("request_desc", format!("Request {desc}"));
        }
        b.push("request_name", format!("Request {name}"));
        return Ok(b.out);
    }

    if action.values.is_empty() {
        return Err(RefError::MissingValue {
            intent: action.intent.clone(),
            slot: slot.name.clone(),
        });
    }

    if slot.is_boolean() {
        let truth = match action.values.as_slice() {
            [v] if v == "True" => true,
            [v] if v == "False" => false,
            _ => {
                return Err(RefError::ValueDomain {
                    slot: slot.name.clone(),
                    values: action.values.clone(),
                })
            }
        };
        boolean_candidates(&mut b, &name, &desc, truth);
    } else if let [value] = action.values.as_slice() {
        if !desc.is_empty() {
            b.push("desc_is_value", format!("{desc} is {value}"));
        }
        b.push("name_is_value", format!("{name} is {value}"));
    } else {
        let joined = join_values(&action.values);
        if !desc.is_empty() {
            b.push("desc_are_values", format!("{desc} are {joined}"));
        }
        b.push("name_are_values", format!("{name} are {joined}"));
    }
    Ok(b.out)
}

fn boolean_candidates(b: &mut Builder, name: &str, desc: &str, truth: bool) {
    let tokens: Vec<String> = name.split(' ').map(str::to_lowercase).collect();
    let has_have = tokens.iter().any(|t| t == "has" || t == "have");
    let has_is = tokens.iter().any(|t| t == "is");
    let answer = if truth { "Yes." } else { "No." };

    if !desc.is_empty() {
        b.push(
            if truth { "desc_yes" } else { "desc_no" },
            format!("{desc}? {answer}"),
        );
    }
    b.push(
        if truth { "name_yes" } else { "name_no" },
        format!("{name}? {answer}"),
    );

    if has_have {
        if truth {
            b.push("does_name", format!("Does {name}"));
        } else {
            b.push("does_not_name", format!("Does not {name}"));
        }
    }
    if has_is {
        if truth {
            b.push("name_with_is", name.to_string());
        } else {
            let negated = name
                .split(' ')
                .map(|t| if t.eq_ignore_ascii_case("is") { "is not" } else { t })
                .collect::<Vec<_>>()
                .join(" ");
            b.push("name_is_not", negated);
        }
    }
    if !has_have && !has_is {
        if truth {
            b.push("has_name", format!("has {name}"));
            b.push("have_name", format!("have {name}"));
            b.push("is_name", format!("is {name}"));
        } else {
            b.push("has_not_name", format!("has not {name}"));
            b.push("have_not_name", format!("have not {name}"));
            b.push("is_not_name", format!("is not {name}"));
            // noun-led slot names also get the "has no" / "does not" readings
            b.push("has_no_name", format!("has no {name}"));
            b.push("does_not_name", format!("does not {name}"));
        }
    }
}

fn fnv1a(parts: &[&str]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for byte in part.bytes().chain(std::iter::once(0x1f)) {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0100_0000_01b3);
        }
    }
    hash
}

/// Replacement values for a tampered copy of `action`.
fn substitute_values(
    action: &DialogueAction,
    slot: &SlotSchema,
    value_pool: &[String],
    opts: NegativeOptions,
) -> Result<Vec<String>, RefError> {
    if slot.is_boolean() {
        return match action.values.as_slice() {
            [v] if v == "True" => Ok(vec!["False".into()]),
            [v] if v == "False" => Ok(vec!["True".into()]),
            _ => Err(RefError::ValueDomain {
                slot: slot.name.clone(),
                values: action.values.clone(),
            }),
        };
    }
    let is_true = |v: &String| action.values.iter().any(|t| t == v);
    if slot.is_categorical && !slot.possible_values.is_empty() {
        let mut out: Vec<String> = Vec::new();
        for v in &slot.possible_values {
            if !is_true(v) && !out.contains(v) {
                out.push(v.clone());
            }
        }
        return Ok(out);
    }
    let mut remaining: Vec<&String> = value_pool.iter().filter(|v| !is_true(v)).collect();
    remaining.dedup();
    if remaining.len() <= opts.per_slot {
        return Ok(remaining.into_iter().cloned().collect());
    }
    let mut key: Vec<&str> = vec![&slot.name];
    key.extend(action.values.iter().map(String::as_str));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ fnv1a(&key));
    let mut picked = index::sample(&mut rng, remaining.len(), opts.per_slot).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| remaining[i].clone()).collect())
}

/// Builds negative references by realizing tampered copies of `action`.
///
/// Returns an empty list (with a logged warning) when no substitute value
/// exists; values are never fabricated.
pub fn build_negatives(
    action: &DialogueAction,
    slot_schema: &SlotSchema,
    value_pool: &[String],
    opts: NegativeOptions,
) -> Result<Vec<NegativeReference>, RefError> {
    if is_special(&action.intent) || action.values.is_empty() {
        return Ok(Vec::new());
    }
    let positives = build_candidates(action, Some(slot_schema))?;
    let substitutes = substitute_values(action, slot_schema, value_pool, opts)?;
    if substitutes.is_empty() {
        log::warn!(
            "no substitutable value for {}({}); no negative references",
            action.intent,
            slot_schema.name
        );
        return Ok(Vec::new());
    }
    let mut out: Vec<NegativeReference> = Vec::new();
    for value in substitutes {
        let tampered = action.with_values(vec![value.clone()]);
        for cand in build_candidates(&tampered, Some(slot_schema))? {
            let clashes = positives.iter().any(|p| p.text == cand.text)
                || out.iter().any(|n| n.text == cand.text);
            if !clashes {
                out.push(NegativeReference {
                    text: cand.text,
                    tampered_value: value.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// References for one action of an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActionRefs {
    pub candidates: Vec<CandidateReference>,
    pub negatives: Vec<NegativeReference>,
    /// Used for premise augmentation; absent for slotless actions.
    pub slot_description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceRefs {
    pub instance_id: String,
    pub actions: Vec<ActionRefs>,
}

pub fn build_instance_refs(
    instance: &EvalInstance,
    catalog: &SchemaCatalog,
    pool: &ValuePool,
    opts: NegativeOptions,
) -> Result<InstanceRefs, RefError> {
    let mut actions = Vec::with_capacity(instance.actions.len());
    for action in &instance.actions {
        let slot = match action.slot.as_deref() {
            Some(name) if !action.is_slotless_intent() => {
                Some(catalog.slot(&instance.service, name).ok_or_else(|| {
                    RefError::UnknownSlot {
                        instance_id: instance.instance_id.clone(),
                        service: instance.service.clone(),
                        slot: name.to_string(),
                    }
                })?)
            }
            _ => None,
        };
        let candidates = build_candidates(action, slot)?;
        let negatives = match slot {
            Some(slot) => build_negatives(
                action,
                slot,
                &pool.values(&instance.service, &slot.name),
                opts,
            )?,
            None => Vec::new(),
        };
        let slot_description = slot
            .map(|s| clean_description(&s.description))
            .filter(|d| !d.is_empty());
        actions.push(ActionRefs {
            candidates,
            negatives,
            slot_description,
        });
    }
    Ok(InstanceRefs {
        instance_id: instance.instance_id.clone(),
        actions,
    })
}
