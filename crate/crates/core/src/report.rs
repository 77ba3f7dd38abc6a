//! Report serialization and atomic file output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::eval::{InstanceResult, MetricReport, Triple};

/// Provenance stamped into every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunInfo {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub backend: String,
}

impl RunInfo {
    pub fn new(config_hash: String, seed: u64, backend: String) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            seed,
            backend,
        }
    }
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Per-action row of the detailed report.
#[derive(Debug, Clone, Serialize)]
pub struct ActionDetail<'a> {
    pub action_index: usize,
    pub reference: &'a str,
    pub faithful: bool,
    pub augmented: bool,
    pub p_entailment: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceDetail<'a> {
    pub instance_id: &'a str,
    pub system_id: &'a str,
    pub validated: bool,
    pub faithful: bool,
    pub slot_error: Option<bool>,
    pub actions: Vec<ActionDetail<'a>>,
}

pub fn instance_details(results: &[InstanceResult]) -> Vec<InstanceDetail<'_>> {
    results
        .iter()
        .map(|r| InstanceDetail {
            instance_id: &r.instance_id,
            system_id: &r.system_id,
            validated: r.validated,
            faithful: r.instance_faithful,
            slot_error: r.slot_error,
            actions: r
                .assessments
                .iter()
                .map(|a| ActionDetail {
                    action_index: a.action_index,
                    reference: &a.entailment_reference.text,
                    faithful: a.faithful,
                    augmented: a.used_augmented_premise,
                    p_entailment: a.verdict.entailment,
                })
                .collect(),
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

fn cells(t: &Triple) -> [String; 3] {
    [cell(t.overall), cell(t.seen), cell(t.unseen)]
}

/// Summary laid out as SER | SGSAcc(validated) | SGSAcc(all), each split
/// into all / seen / unseen.
pub fn summary_table(reports: &[MetricReport]) -> String {
    let mut out = String::new();
    let width = reports.iter().map(|r| r.system_id.len()).max().unwrap_or(0).max(6);
    let _ = writeln!(
        out,
        "{:<width$} | {:^23} | {:^23} | {:^23}",
        "system", "SER", "SGSAcc(validated)", "SGSAcc(all)"
    );
    let _ = writeln!(
        out,
        "{:<width$} | {:>7}{:>8}{:>8} | {:>7}{:>8}{:>8} | {:>7}{:>8}{:>8}",
        "", "all", "seen", "unseen", "all", "seen", "unseen", "all", "seen", "unseen"
    );
    for r in reports {
        let ser = cells(&r.ser);
        let val = r.sgsacc_validated.as_ref().map_or_else(
            || ["-".to_string(), "-".to_string(), "-".to_string()],
            cells,
        );
        let all = cells(&r.sgsacc_all);
        let _ = writeln!(
            out,
            "{:<width$} | {:>7}{:>8}{:>8} | {:>7}{:>8}{:>8} | {:>7}{:>8}{:>8}",
            r.system_id, ser[0], ser[1], ser[2], val[0], val[1], val[2], all[0], all[1], all[2]
        );
    }
    out
}
