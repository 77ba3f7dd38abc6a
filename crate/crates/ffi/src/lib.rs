//! C ABI for the sgsacc toolkit.
//!
//! Every fallible call returns an [`SgsStatus`]; on failure the message is
//! available from [`sgs_last_error`] on the same thread. Strings handed out
//! by the library are NUL-terminated UTF-8 and must be released with
//! [`sgs_string_free`]. Structured results are JSON.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sgsacc::config::{sha256_hex, BackendKind, ConfigError, InputDigests, RunConfig};
use sgsacc::data::{self, DataError, DialogueAction, SchemaCatalog};
use sgsacc::eval::{augment_premise, EvalError};
use sgsacc::nli::{mock_verdict, CachedNli, NliBackend, NliLabel};
use sgsacc::pipeline::{self, Dataset};
use sgsacc::refs::{build_candidates, InstanceRefs, RefError};
use sgsacc::report::{self, RunInfo};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Backend = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgsLabel {
    Entailment = 0,
    Neutral = 1,
    Contradiction = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgsVerdict {
    pub entailment: f64,
    pub neutral: f64,
    pub contradiction: f64,
    pub label: SgsLabel,
}

/// Session settings. `nli_url` selects the remote backend when non-null;
/// otherwise the deterministic mock is used.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SgsOptions {
    pub validation: bool,
    pub augmentation: bool,
    pub exact_case_ser: bool,
    pub negatives_per_slot: u32,
    pub seed: u64,
    pub nli_url: *const c_char,
}

/// A parsed schema catalog.
pub struct SgsCatalog(SchemaCatalog);

/// Schemas, instances, references and an NLI backend, ready to evaluate.
/// Safe to share between threads once created.
pub struct SgsSession {
    config: RunConfig,
    inputs: InputDigests,
    dataset: Dataset,
    refs: Vec<InstanceRefs>,
    nli: CachedNli<Box<dyn NliBackend>>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SgsStatus, String);

impl Failure {
    fn input(e: impl ToString) -> Self {
        Failure(SgsStatus::InvalidInput, e.to_string())
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::input(e)
    }
}

impl From<RefError> for Failure {
    fn from(e: RefError) -> Self {
        Failure::input(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::input(e)
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Nli(_) => Failure(SgsStatus::Backend, e.to_string()),
            EvalError::Internal(_) => Failure(SgsStatus::Panic, e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::input(e)
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SgsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SgsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside sgsacc".into());
            SgsStatus::Panic
        }
    }
}

unsafe fn required<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(SgsStatus::NullArgument, format!("`{what}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(SgsStatus::InvalidUtf8, format!("`{what}`: {e}")))
}

unsafe fn optional<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        required(p, what).map(Some)
    }
}

unsafe fn emit(out: *mut *mut c_char, text: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(SgsStatus::NullArgument, "output pointer is null".into()));
    }
    let c = CString::new(text).map_err(|e| Failure(SgsStatus::Panic, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn check_out<T>(out: *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(SgsStatus::NullArgument, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn sgs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next library call on the same thread.
#[no_mangle]
pub extern "C" fn sgs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn sgs_options_default() -> SgsOptions {
    let d = RunConfig::default();
    SgsOptions {
        validation: d.validation,
        augmentation: d.augmentation,
        exact_case_ser: d.exact_case_ser,
        negatives_per_slot: d.negatives_per_slot as u32,
        seed: d.seed,
        nli_url: ptr::null(),
    }
}

/// Parses a schema file's contents.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgs_catalog_from_json(json: *const c_char, out: *mut *mut SgsCatalog) -> SgsStatus {
    guard(|| {
        check_out(out)?;
        let catalog = data::parse_schemas_str(required(json, "json")?)?;
        *out = Box::into_raw(Box::new(SgsCatalog(catalog)));
        Ok(())
    })
}

/// # Safety
/// `catalog` must be null or a live handle from [`sgs_catalog_from_json`].
#[no_mangle]
pub unsafe extern "C" fn sgs_catalog_free(catalog: *mut SgsCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

/// Candidate references for one action of `service`, as a JSON array of
/// `{"text", "rule_id"}`. The action is JSON: `{"intent", "slot", "values"}`.
///
/// # Safety
/// Pointers must be valid; `out` receives a string for [`sgs_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sgs_build_candidates(
    catalog: *const SgsCatalog,
    service: *const c_char,
    action_json: *const c_char,
    out: *mut *mut c_char,
) -> SgsStatus {
    guard(|| {
        let catalog = catalog
            .as_ref()
            .ok_or_else(|| Failure(SgsStatus::NullArgument, "`catalog` is null".into()))?;
        let service = required(service, "service")?;
        let action: DialogueAction = serde_json::from_str(required(action_json, "action_json")?)?;
        if catalog.0.service(service).is_none() {
            return Err(Failure::input(format!("unknown service `{service}`")));
        }
        let slot = match action.slot.as_deref() {
            Some(name) => Some(
                catalog
                    .0
                    .slot(service, name)
                    .ok_or_else(|| Failure::input(format!("slot `{name}` not in `{service}`")))?,
            ),
            None => None,
        };
        let candidates = build_candidates(&action, slot)?;
        emit(out, serde_json::to_string(&candidates)?)
    })
}

/// Premise augmented with a previous turn and slot description; either
/// may be null.
///
/// # Safety
/// Pointers must be valid; `out` receives a string for [`sgs_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sgs_augment_premise(
    utterance: *const c_char,
    previous_turn: *const c_char,
    slot_description: *const c_char,
    out: *mut *mut c_char,
) -> SgsStatus {
    guard(|| {
        let text = augment_premise(
            required(utterance, "utterance")?,
            optional(previous_turn, "previous_turn")?,
            optional(slot_description, "slot_description")?,
        );
        emit(out, text)
    })
}

/// Classifies a pair with the deterministic mock backend.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sgs_mock_classify(
    premise: *const c_char,
    hypothesis: *const c_char,
    out: *mut SgsVerdict,
) -> SgsStatus {
    guard(|| {
        check_out(out)?;
        let v = mock_verdict(required(premise, "premise")?, required(hypothesis, "hypothesis")?);
        *out = SgsVerdict {
            entailment: v.entailment,
            neutral: v.neutral,
            contradiction: v.contradiction,
            label: match v.label() {
                NliLabel::Entailment => SgsLabel::Entailment,
                NliLabel::Neutral => SgsLabel::Neutral,
                NliLabel::Contradiction => SgsLabel::Contradiction,
            },
        };
        Ok(())
    })
}

/// Loads schemas and instances and builds references.
/// `unseen_domains_json` is a JSON array of domain names or null;
/// `options` may be null for defaults.
///
/// # Safety
/// Pointers must be valid; `out` receives a handle for [`sgs_session_free`].
#[no_mangle]
pub unsafe extern "C" fn sgs_session_new(
    schemas_json: *const c_char,
    instances_json: *const c_char,
    unseen_domains_json: *const c_char,
    options: *const SgsOptions,
    out: *mut *mut SgsSession,
) -> SgsStatus {
    guard(|| {
        check_out(out)?;
        let schemas = required(schemas_json, "schemas_json")?;
        let instances = required(instances_json, "instances_json")?;
        let unseen: Vec<String> = match optional(unseen_domains_json, "unseen_domains_json")? {
            Some(text) => serde_json::from_str(text)?,
            None => Vec::new(),
        };
        let opts = options.as_ref().copied().unwrap_or_else(|| sgs_options_default());
        let url = optional(opts.nli_url, "nli_url")?;
        let config = RunConfig {
            nli: if url.is_some() { BackendKind::Remote } else { BackendKind::Mock },
            nli_url: url.map(String::from),
            unseen_domains: unseen,
            validation: opts.validation,
            augmentation: opts.augmentation,
            exact_case_ser: opts.exact_case_ser,
            negatives_per_slot: opts.negatives_per_slot as usize,
            seed: opts.seed,
            ..RunConfig::default()
        };
        let catalog = data::parse_schemas_str(schemas)?;
        let parsed = data::parse_instances_str(instances, &catalog, &config.unseen_domains)?;
        let dataset = Dataset::new(catalog, parsed);
        let refs = dataset.build_refs(config.negative_options())?;
        let nli = config.backend()?;
        let inputs = InputDigests {
            schemas: Some(sha256_hex(schemas.as_bytes())),
            instances: Some(sha256_hex(instances.as_bytes())),
            ..InputDigests::default()
        };
        *out = Box::into_raw(Box::new(SgsSession { config, inputs, dataset, refs, nli }));
        Ok(())
    })
}

/// # Safety
/// `session` must be null or a live handle from [`sgs_session_new`].
#[no_mangle]
pub unsafe extern "C" fn sgs_session_free(session: *mut SgsSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

unsafe fn live_session<'a>(p: *const SgsSession) -> Result<&'a SgsSession, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(SgsStatus::NullArgument, "`session` is null".into()))
}

impl SgsSession {
    fn run_info(&self, inputs: &InputDigests) -> RunInfo {
        RunInfo::new(self.config.fingerprint_with(inputs), self.config.seed, self.nli.identity())
    }
}

/// Validates every ground truth. Output JSON:
/// `{"run", "instances", "excluded", "exclusion_rate", "outcomes"}`.
///
/// # Safety
/// Pointers must be valid; `out` receives a string for [`sgs_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sgs_session_validate(session: *const SgsSession, out: *mut *mut c_char) -> SgsStatus {
    guard(|| {
        let s = live_session(session)?;
        let outcomes = pipeline::validate_all(&s.dataset, &s.refs, &s.nli, s.config.augmentation)?;
        let excluded = outcomes.iter().filter(|o| !o.passed).count();
        let rate = (!outcomes.is_empty()).then(|| 100.0 * excluded as f64 / outcomes.len() as f64);
        let body = serde_json::json!({
            "run": s.run_info(&s.inputs),
            "instances": outcomes.len(),
            "excluded": excluded,
            "exclusion_rate": rate,
            "outcomes": outcomes,
        });
        emit(out, body.to_string())
    })
}

/// Scores a generations file's contents (JSON array or JSON Lines) for every
/// system it contains. Output JSON: `{"run", "systems", "details"}` where
/// `details` maps system id to per-instance results.
///
/// # Safety
/// Pointers must be valid; `out` receives a string for [`sgs_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sgs_session_evaluate(
    session: *const SgsSession,
    generations_json: *const c_char,
    out: *mut *mut c_char,
) -> SgsStatus {
    guard(|| {
        let s = live_session(session)?;
        let text = required(generations_json, "generations_json")?;
        let (generations, _dangling) =
            data::resolve_generations(data::parse_generations_str(text)?, &s.dataset.instances);
        let opts = s.config.eval_options();
        let prepared = pipeline::prepare_all(&s.dataset, &s.refs, &s.nli, opts)?;
        let mut systems = Vec::new();
        let mut details = serde_json::Map::new();
        for system in data::group_by_system(&generations).into_keys() {
            let eval =
                pipeline::evaluate_system(&s.dataset, &s.refs, &prepared, &system, &generations, &s.nli, opts)?;
            details.insert(system, serde_json::to_value(report::instance_details(&eval.results))?);
            systems.push(eval.report);
        }
        let inputs = InputDigests { generations: vec![sha256_hex(text.as_bytes())], ..s.inputs.clone() };
        let body = serde_json::json!({
            "run": s.run_info(&inputs),
            "systems": systems,
            "details": details,
        });
        emit(out, body.to_string())
    })
}
