use std::collections::BTreeMap;

use serde::Serialize;

use super::InstanceResult;
use crate::data::{EvalInstance, SchemaCatalog};

/// Percentages over all / seen / unseen instances; `None` for an empty bucket.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Triple {
    pub overall: Option<f64>,
    pub seen: Option<f64>,
    pub unseen: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BucketCounts {
    pub overall: usize,
    pub seen: usize,
    pub unseen: usize,
}

impl BucketCounts {
    fn add(&mut self, unseen: bool) {
        self.overall += 1;
        if unseen {
            self.unseen += 1;
        } else {
            self.seen += 1;
        }
    }
}

fn percent(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| 100.0 * hits as f64 / total as f64)
}

fn triple(hits: BucketCounts, totals: BucketCounts) -> Triple {
    Triple {
        overall: percent(hits.overall, totals.overall),
        seen: percent(hits.seen, totals.seen),
        unseen: percent(hits.unseen, totals.unseen),
    }
}

/// One non-categorical value looked up in a generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlotCheck {
    pub action_index: usize,
    pub slot: String,
    pub value: String,
    pub found: bool,
}

/// Looks up every value of every valued non-categorical slot in `text`.
///
/// Returns `(None, [])` when the instance has no such slot, otherwise
/// whether any value is missing plus the individual checks.
pub fn check_slots(
    text: &str,
    instance: &EvalInstance,
    catalog: &SchemaCatalog,
    exact_case: bool,
) -> (Option<bool>, Vec<SlotCheck>) {
    let haystack = if exact_case { text.to_string() } else { text.to_lowercase() };
    let mut checks = Vec::new();
    for (action_index, action) in instance.actions.iter().enumerate() {
        if action.intent == "REQUEST" {
            continue;
        }
        let Some(slot_name) = action.slot.as_deref() else { continue };
        let Some(slot) = catalog.slot(&instance.service, slot_name) else { continue };
        if slot.is_categorical {
            continue;
        }
        for value in &action.values {
            let needle = if exact_case { value.clone() } else { value.to_lowercase() };
            checks.push(SlotCheck {
                action_index,
                slot: slot_name.to_string(),
                value: value.clone(),
                found: haystack.contains(&needle),
            });
        }
    }
    if checks.is_empty() {
        (None, checks)
    } else {
        (Some(checks.iter().any(|c| !c.found)), checks)
    }
}

/// Slot error rate: percentage of evaluable instances with a missing value.
pub fn compute_ser(results: &[InstanceResult]) -> (Triple, BucketCounts) {
    let mut errors = BucketCounts::default();
    let mut evaluable = BucketCounts::default();
    for r in results {
        if let Some(err) = r.slot_error {
            evaluable.add(r.is_unseen_domain);
            if err {
                errors.add(r.is_unseen_domain);
            }
        }
    }
    (triple(errors, evaluable), evaluable)
}

/// SGSAcc over all instances and over validated instances only.
pub fn compute_sgsacc(results: &[InstanceResult]) -> (Triple, Triple) {
    let mut faithful = BucketCounts::default();
    let mut total = BucketCounts::default();
    let mut faithful_validated = BucketCounts::default();
    let mut total_validated = BucketCounts::default();
    for r in results {
        total.add(r.is_unseen_domain);
        if r.instance_faithful {
            faithful.add(r.is_unseen_domain);
        }
        if r.validated {
            total_validated.add(r.is_unseen_domain);
            if r.instance_faithful {
                faithful_validated.add(r.is_unseen_domain);
            }
        }
    }
    (
        triple(faithful, total),
        triple(faithful_validated, total_validated),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotErrorRate {
    pub missing: usize,
    pub checked: usize,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub system_id: String,
    pub sgsacc_all: Triple,
    /// Absent when the validation step is disabled.
    pub sgsacc_validated: Option<Triple>,
    pub ser: Triple,
    pub instances: BucketCounts,
    pub validated_instances: BucketCounts,
    pub ser_instances: BucketCounts,
    pub excluded_count: usize,
    /// Instances with no generation from this system.
    pub missing_generations: usize,
    /// Value-level SER keyed by slot name.
    pub per_slot_ser: BTreeMap<String, SlotErrorRate>,
}

pub fn metric_report(
    system_id: &str,
    results: &[InstanceResult],
    validation_enabled: bool,
    missing_generations: usize,
) -> MetricReport {
    let (sgsacc_all, sgsacc_validated) = compute_sgsacc(results);
    let (ser, ser_instances) = compute_ser(results);
    let mut instances = BucketCounts::default();
    let mut validated_instances = BucketCounts::default();
    let mut per_slot: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in results {
        instances.add(r.is_unseen_domain);
        if r.validated {
            validated_instances.add(r.is_unseen_domain);
        }
        for c in &r.slot_checks {
            let e = per_slot.entry(c.slot.clone()).or_default();
            e.1 += 1;
            if !c.found {
                e.0 += 1;
            }
        }
    }
    MetricReport {
        system_id: system_id.to_string(),
        sgsacc_all,
        sgsacc_validated: validation_enabled.then_some(sgsacc_validated),
        ser,
        instances,
        validated_instances,
        ser_instances,
        excluded_count: instances.overall - validated_instances.overall,
        missing_generations,
        per_slot_ser: per_slot
            .into_iter()
            .map(|(slot, (missing, checked))| {
                (
                    slot,
                    SlotErrorRate {
                        missing,
                        checked,
                        rate: percent(missing, checked),
                    },
                )
            })
            .collect(),
    }
}
