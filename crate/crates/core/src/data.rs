//! Dialogue data model and file ingestion.
//!
//! Schema files follow the layout of the Schema-Guided Dialogue release: a
//! JSON array of services, each with `service_name` and `slots[]` carrying
//! `name`, `description`, `is_categorical` and `possible_values`. Unknown
//! fields (`intents`, `description` of the service, ...) are ignored so the
//! real dataset loads unchanged.
//!
//! Instance and generation files are either a JSON array or JSON Lines.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Intents whose actions carry no slot.
pub const SLOTLESS_INTENTS: [&str; 2] = ["GOODBYE", "REQ_MORE"];

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {what} at {location}: {message}")]
    Parse {
        what: &'static str,
        location: String,
        message: String,
    },
    #[error("duplicate service `{0}` in schema catalog")]
    DuplicateService(String),
    #[error("duplicate slot `{slot}` in service `{service}`")]
    DuplicateSlot { service: String, slot: String },
    #[error("instance `{instance_id}`: {message}")]
    Resolution { instance_id: String, message: String },
    #[error("invalid slot schema `{slot}`: {message}")]
    InvalidSlot { slot: String, message: String },
    #[error("duplicate instance id `{0}`")]
    DuplicateInstance(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSchema {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub is_categorical: bool,
    /// Absent in SGD schema files; inferred from `possible_values` when missing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    is_boolean: Option<bool>,
    #[serde(default)]
    pub possible_values: Vec<String>,
}

impl SlotSchema {
    pub fn new(name: &str, description: &str) -> Self {
        Self {
            name: name.to_string(),
            description: description.to_string(),
            is_categorical: false,
            is_boolean: None,
            possible_values: Vec::new(),
        }
    }

    pub fn categorical(mut self, values: &[&str]) -> Self {
        self.is_categorical = true;
        self.possible_values = values.iter().map(|v| v.to_string()).collect();
        self
    }

    pub fn boolean(name: &str, description: &str) -> Self {
        let mut slot = Self::new(name, description).categorical(&["True", "False"]);
        slot.is_boolean = Some(true);
        slot
    }

    /// A categorical slot whose value set is exactly {True, False}, unless
    /// the file states the flag explicitly.
    pub fn is_boolean(&self) -> bool {
        self.is_boolean.unwrap_or_else(|| {
            self.is_categorical
                && !self.possible_values.is_empty()
                && self.possible_values.iter().all(|v| v == "True" || v == "False")
        })
    }

    fn check(&self) -> Result<(), DataError> {
        let bad = |message: &str| DataError::InvalidSlot {
            slot: self.name.clone(),
            message: message.to_string(),
        };
        if self.name.trim().is_empty() {
            return Err(bad("empty slot name"));
        }
        if self.is_boolean() {
            if !self.is_categorical {
                return Err(bad("boolean slot must be categorical"));
            }
            if self.possible_values.iter().any(|v| v != "True" && v != "False") {
                return Err(bad("boolean slot values must be True/False"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceSchema {
    pub service_name: String,
    #[serde(default)]
    pub slots: Vec<SlotSchema>,
}

impl ServiceSchema {
    pub fn slot(&self, name: &str) -> Option<&SlotSchema> {
        self.slots.iter().find(|s| s.name == name)
    }
}

/// Services keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemaCatalog {
    services: BTreeMap<String, ServiceSchema>,
}

impl SchemaCatalog {
    pub fn from_services(services: Vec<ServiceSchema>) -> Result<Self, DataError> {
        let mut map = BTreeMap::new();
        for service in services {
            let mut seen = HashSet::new();
            for slot in &service.slots {
                slot.check()?;
                if !seen.insert(slot.name.as_str()) {
                    return Err(DataError::DuplicateSlot {
                        service: service.service_name.clone(),
                        slot: slot.name.clone(),
                    });
                }
            }
            if map.contains_key(&service.service_name) {
                return Err(DataError::DuplicateService(service.service_name));
            }
            map.insert(service.service_name.clone(), service);
        }
        Ok(Self { services: map })
    }

    pub fn service(&self, name: &str) -> Option<&ServiceSchema> {
        self.services.get(name)
    }

    pub fn slot(&self, service: &str, slot: &str) -> Option<&SlotSchema> {
        self.service(service).and_then(|s| s.slot(slot))
    }

    pub fn services(&self) -> impl Iterator<Item = &ServiceSchema> {
        self.services.values()
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueAction {
    #[serde(alias = "act")]
    pub intent: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    #[serde(default)]
    pub values: Vec<String>,
}

impl DialogueAction {
    pub fn new(intent: &str, slot: Option<&str>, values: &[&str]) -> Self {
        Self {
            intent: intent.to_string(),
            slot: slot.map(str::to_string),
            values: values.iter().map(|v| v.to_string()).collect(),
        }
    }

    pub fn is_slotless_intent(&self) -> bool {
        SLOTLESS_INTENTS.contains(&self.intent.as_str())
    }

    /// Same intent and slot, different values.
    pub fn with_values(&self, values: Vec<String>) -> Self {
        Self {
            intent: self.intent.clone(),
            slot: self.slot.clone(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalInstance {
    pub instance_id: String,
    pub service: String,
    pub domain: String,
    pub actions: Vec<DialogueAction>,
    pub ground_truth: String,
    pub previous_turn: Option<String>,
    #[serde(skip)]
    pub is_unseen_domain: bool,
}

/// On-disk form of an instance record.
#[derive(Debug, Clone, Deserialize)]
struct InstanceRecord {
    instance_id: String,
    service: String,
    #[serde(default)]
    domain: Option<String>,
    #[serde(default)]
    actions: Vec<DialogueAction>,
    #[serde(default)]
    ground_truth: Option<String>,
    #[serde(default)]
    previous_turn: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationCandidate {
    pub instance_id: String,
    pub system_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
}

/// A generation whose `instance_id` matches no ingested instance.
#[derive(Debug, Clone, PartialEq)]
pub struct DanglingGeneration {
    pub instance_id: String,
    pub system_id: String,
}

/// Domain of an SGD service name: `Restaurants_1` -> `Restaurants`.
pub fn domain_of_service(service: &str) -> &str {
    match service.rsplit_once('_') {
        Some((head, tail)) if !head.is_empty() && tail.chars().all(|c| c.is_ascii_digit()) => head,
        _ => service,
    }
}

fn read(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses a JSON array, or JSON Lines when the text does not start with `[`.
fn parse_records<T: for<'de> Deserialize<'de>>(
    text: &str,
    what: &'static str,
) -> Result<Vec<T>, DataError> {
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    if trimmed.starts_with('[') {
        let values: Vec<serde_json::Value> =
            serde_json::from_str(trimmed).map_err(|e| DataError::Parse {
                what,
                location: format!("line {} column {}", e.line(), e.column()),
                message: e.to_string(),
            })?;
        values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::from_value(v).map_err(|e| DataError::Parse {
                    what,
                    location: format!("entry {i}"),
                    message: e.to_string(),
                })
            })
            .collect()
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, line)| !line.trim().is_empty())
            .map(|(i, line)| {
                serde_json::from_str(line).map_err(|e| DataError::Parse {
                    what,
                    location: format!("line {}", i + 1),
                    message: e.to_string(),
                })
            })
            .collect()
    }
}

pub fn parse_schemas_str(text: &str) -> Result<SchemaCatalog, DataError> {
    let services: Vec<ServiceSchema> = parse_records(text, "schema")?;
    for (i, s) in services.iter().enumerate() {
        if s.service_name.trim().is_empty() {
            return Err(DataError::Parse {
                what: "schema",
                location: format!("entry {i}"),
                message: "empty service_name".into(),
            });
        }
    }
    SchemaCatalog::from_services(services)
}

pub fn parse_schemas(path: &Path) -> Result<SchemaCatalog, DataError> {
    parse_schemas_str(&read(path)?)
}

pub fn parse_instances_str(
    text: &str,
    catalog: &SchemaCatalog,
    unseen_domains: &[String],
) -> Result<Vec<EvalInstance>, DataError> {
    let records: Vec<InstanceRecord> = parse_records(text, "instance")?;
    let mut ids = HashSet::new();
    let mut instances = Vec::with_capacity(records.len());
    for record in records {
        let instance_id = record.instance_id;
        let resolution = |message: String| DataError::Resolution {
            instance_id: instance_id.clone(),
            message,
        };
        let ground_truth = match record.ground_truth {
            Some(gt) if !gt.trim().is_empty() => gt,
            _ => {
                return Err(DataError::Parse {
                    what: "instance",
                    location: format!("instance `{instance_id}`"),
                    message: "missing ground_truth".into(),
                })
            }
        };
        if record.actions.is_empty() {
            return Err(DataError::Parse {
                what: "instance",
                location: format!("instance `{instance_id}`"),
                message: "no dialogue actions".into(),
            });
        }
        let service = catalog
            .service(&record.service)
            .ok_or_else(|| resolution(format!("unknown service `{}`", record.service)))?;
        for action in &record.actions {
            if action.intent.trim().is_empty() {
                return Err(resolution("action with empty intent".into()));
            }
            match &action.slot {
                Some(slot) if !slot.is_empty() => {
                    if service.slot(slot).is_none() {
                        return Err(resolution(format!(
                            "slot `{slot}` not in service `{}`",
                            service.service_name
                        )));
                    }
                }
                _ if action.is_slotless_intent() => {}
                _ => {
                    return Err(resolution(format!(
                        "{} action without a slot",
                        action.intent
                    )))
                }
            }
        }
        if !ids.insert(instance_id.clone()) {
            return Err(DataError::DuplicateInstance(instance_id));
        }
        let domain = record
            .domain
            .unwrap_or_else(|| domain_of_service(&record.service).to_string());
        let is_unseen_domain = unseen_domains.contains(&domain);
        instances.push(EvalInstance {
            instance_id,
            service: record.service,
            domain,
            actions: record
                .actions
                .into_iter()
                .map(|mut a| {
                    if a.slot.as_deref() == Some("") {
                        a.slot = None;
                    }
                    a
                })
                .collect(),
            ground_truth,
            previous_turn: record.previous_turn.filter(|p| !p.trim().is_empty()),
            is_unseen_domain,
        });
    }
    Ok(instances)
}

pub fn parse_instances(
    path: &Path,
    catalog: &SchemaCatalog,
    unseen_domains: &[String],
) -> Result<Vec<EvalInstance>, DataError> {
    parse_instances_str(&read(path)?, catalog, unseen_domains)
}

pub fn parse_generations_str(text: &str) -> Result<Vec<GenerationCandidate>, DataError> {
    let mut gens: Vec<GenerationCandidate> = parse_records(text, "generation")?;
    for g in &mut gens {
        if g.log_likelihood.is_some_and(|ll| !ll.is_finite()) {
            g.log_likelihood = None;
        }
    }
    Ok(gens)
}

pub fn parse_generations(path: &Path) -> Result<Vec<GenerationCandidate>, DataError> {
    parse_generations_str(&read(path)?)
}

/// Drops generations that reference unknown instances, returning them separately.
pub fn resolve_generations(
    generations: Vec<GenerationCandidate>,
    instances: &[EvalInstance],
) -> (Vec<GenerationCandidate>, Vec<DanglingGeneration>) {
    let known: HashSet<&str> = instances.iter().map(|i| i.instance_id.as_str()).collect();
    let mut kept = Vec::with_capacity(generations.len());
    let mut dangling = Vec::new();
    for g in generations {
        if known.contains(g.instance_id.as_str()) {
            kept.push(g);
        } else {
            log::warn!(
                "generation from `{}` references unknown instance `{}`; skipped",
                g.system_id,
                g.instance_id
            );
            dangling.push(DanglingGeneration {
                instance_id: g.instance_id,
                system_id: g.system_id,
            });
        }
    }
    (kept, dangling)
}

/// Groups candidates by system, then by instance, preserving input order within each group.
pub fn group_by_system(
    generations: &[GenerationCandidate],
) -> BTreeMap<String, BTreeMap<String, Vec<&GenerationCandidate>>> {
    let mut out: BTreeMap<String, BTreeMap<String, Vec<&GenerationCandidate>>> = BTreeMap::new();
    for g in generations {
        out.entry(g.system_id.clone())
            .or_default()
            .entry(g.instance_id.clone())
            .or_default()
            .push(g);
    }
    out
}

/// Serializes instances back to the instance-file format (JSON array).
pub fn instances_to_json(instances: &[EvalInstance]) -> String {
    serde_json::to_string_pretty(instances).expect("instances serialize")
}

/// All values observed per (service, slot) across the dataset, plus the
/// schema's possible values. Feeds negative sampling for non-categorical slots.
#[derive(Debug, Clone, Default)]
pub struct ValuePool {
    values: BTreeMap<(String, String), BTreeSet<String>>,
}

impl ValuePool {
    pub fn build(catalog: &SchemaCatalog, instances: &[EvalInstance]) -> Self {
        let mut values: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
        for service in catalog.services() {
            for slot in &service.slots {
                let entry = values
                    .entry((service.service_name.clone(), slot.name.clone()))
                    .or_default();
                entry.extend(slot.possible_values.iter().cloned());
            }
        }
        for inst in instances {
            for action in &inst.actions {
                if let Some(slot) = &action.slot {
                    values
                        .entry((inst.service.clone(), slot.clone()))
                        .or_default()
                        .extend(action.values.iter().cloned());
                }
            }
        }
        Self { values }
    }

    /// Sorted, deduplicated values for a slot.
    pub fn values(&self, service: &str, slot: &str) -> Vec<String> {
        self.values
            .get(&(service.to_string(), slot.to_string()))
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default()
    }
}
