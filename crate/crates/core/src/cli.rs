//! Command-line front end.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{resolve_nli_url, BackendKind, ConfigError, ConfigFile, RunConfig};
use crate::data::{self, DataError, GenerationCandidate};
use crate::eval::{EvalError, MetricReport, ValidationOutcome};
use crate::nli::{NliBackend, NliError};
use crate::pipeline::{self, Dataset};
use crate::refs::RefError;
use crate::report::{self, RunInfo};
use crate::rerank::EnsembleGeneration;
use crate::robustness::{run_robustness, RobustnessError, RobustnessReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sgsacc", version, about = "Schema-guided faithfulness evaluation for dialogue generation")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score generation files and write summary and per-instance reports.
    Evaluate(RunArgs),
    /// Run only the validation step over the ground truths.
    Validate(RunArgs),
    /// Merge several systems' generations by fidelity score.
    Rerank(RunArgs),
    /// Precision/recall/F1 of faithfulness classification per schema variant.
    Robustness(RunArgs),
    /// Dump candidate and negative references for audit.
    BuildRefs(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub schemas: Option<PathBuf>,
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Generation file; repeat or list several.
    #[arg(long, num_args = 1..)]
    pub generations: Vec<PathBuf>,
    /// Schema variant file; repeat or list several.
    #[arg(long, num_args = 1..)]
    pub variants: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub nli: Option<BackendKind>,
    /// Base URL of the NLI sidecar (default: $SGSACC_NLI_URL).
    #[arg(long)]
    pub nli_url: Option<String>,
    /// Comma-separated domains absent from training data.
    #[arg(long, value_delimiter = ',')]
    pub unseen_domains: Option<Vec<String>>,
    #[arg(long)]
    pub no_validation: bool,
    #[arg(long)]
    pub no_augmentation: bool,
    #[arg(long)]
    pub negatives_per_slot: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "out")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Case-sensitive value matching for slot error rate.
    #[arg(long)]
    pub exact_case: bool,
}

impl RunArgs {
    fn as_overrides(&self) -> ConfigFile {
        ConfigFile {
            schemas: self.schemas.clone(),
            instances: self.instances.clone(),
            generations: self.generations.clone(),
            variants: self.variants.clone(),
            nli: self.nli,
            nli_url: None,
            unseen_domains: self.unseen_domains.clone(),
            validation: self.no_validation.then_some(false),
            augmentation: self.no_augmentation.then_some(false),
            negatives_per_slot: self.negatives_per_slot,
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            workers: self.workers,
            exact_case_ser: self.exact_case.then_some(true),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Refs(#[from] RefError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Robustness(#[from] RobustnessError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Data(_) | CliError::Refs(_) | CliError::Usage(_) => {
                EXIT_INPUT
            }
            CliError::Eval(EvalError::Nli(e)) => nli_exit_code(e),
            CliError::Robustness(RobustnessError::Eval(EvalError::Nli(e))) => nli_exit_code(e),
            CliError::Robustness(RobustnessError::Refs { .. })
            | CliError::Robustness(RobustnessError::MissingService { .. }) => EXIT_INPUT,
            _ => EXIT_FAILURE,
        }
    }
}

fn nli_exit_code(e: &NliError) -> i32 {
    match e {
        NliError::InvalidPair(_) => EXIT_INPUT,
        _ => EXIT_BACKEND,
    }
}

/// Merges the config file (if any) with flag overrides.
pub fn build_config(config: Option<&Path>, args: &RunArgs) -> Result<RunConfig, ConfigError> {
    let file = match config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let file_url = file.nli_url.clone();
    let mut cfg = RunConfig::resolve(file.overlay(args.as_overrides()));
    cfg.nli_url = resolve_nli_url(args.nli_url.clone(), file_url);
    Ok(cfg)
}

/// Parses arguments, runs the command, prints its summary, returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let (name, args) = match &cli.command {
        Command::Evaluate(a) => ("evaluate", a),
        Command::Validate(a) => ("validate", a),
        Command::Rerank(a) => ("rerank", a),
        Command::Robustness(a) => ("robustness", a),
        Command::BuildRefs(a) => ("build-refs", a),
    };
    let result = build_config(cli.config.as_deref(), args)
        .map_err(CliError::from)
        .and_then(|cfg| match &cli.command {
            Command::Evaluate(_) => cmd_evaluate(&cfg),
            Command::Validate(_) => cmd_validate(&cfg),
            Command::Rerank(_) => cmd_rerank(&cfg),
            Command::Robustness(_) => cmd_robustness(&cfg),
            Command::BuildRefs(_) => cmd_build_refs(&cfg),
        });
    match result {
        Ok(summary) => {
            print!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("sgsacc {name}: {e}");
            e.exit_code()
        }
    }
}

fn in_pool<T: Send>(
    cfg: &RunConfig,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    pool.install(f)
}

fn write(path: PathBuf, value: &impl Serialize) -> Result<(), CliError> {
    report::write_json(&path, value).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    Ok(Dataset::load(
        cfg.require_schemas()?,
        cfg.require_instances()?,
        &cfg.unseen_domains,
    )?)
}

fn load_generations(
    cfg: &RunConfig,
    dataset: &Dataset,
) -> Result<(Vec<GenerationCandidate>, Vec<data::DanglingGeneration>), CliError> {
    if cfg.generations.is_empty() {
        return Err(CliError::Usage("at least one --generations file is required".into()));
    }
    let mut all = Vec::new();
    for path in &cfg.generations {
        all.extend(data::parse_generations(path)?);
    }
    Ok(data::resolve_generations(all, &dataset.instances))
}

#[derive(Serialize)]
struct DanglingRow<'a> {
    instance_id: &'a str,
    system_id: &'a str,
}

#[derive(Serialize)]
struct EvaluateSummary<'a> {
    run: &'a RunInfo,
    instances: usize,
    seen: usize,
    unseen: usize,
    systems: &'a [MetricReport],
    dangling_generations: Vec<DanglingRow<'a>>,
}

/// File-name-safe form of a system id.
fn file_stem(system_id: &str) -> String {
    system_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<String, CliError> {
    let dataset = load_dataset(cfg)?;
    let (generations, dangling) = load_generations(cfg, &dataset)?;
    let refs = dataset.build_refs(cfg.negative_options())?;
    let nli = cfg.backend()?;
    let run = RunInfo::new(cfg.fingerprint()?, cfg.seed, nli.identity());
    let opts = cfg.eval_options();

    let systems: Vec<String> = data::group_by_system(&generations).into_keys().collect();
    let evaluations = in_pool(cfg, || {
        let prepared = pipeline::prepare_all(&dataset, &refs, &nli, opts)?;
        systems
            .iter()
            .map(|s| {
                pipeline::evaluate_system(&dataset, &refs, &prepared, s, &generations, &nli, opts)
                    .map_err(CliError::from)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let reports: Vec<MetricReport> = evaluations.iter().map(|e| e.report.clone()).collect();
    let (seen, unseen) = dataset.seen_unseen_counts();
    for eval in &evaluations {
        #[derive(Serialize)]
        struct Details<'a> {
            run: &'a RunInfo,
            system_id: &'a str,
            instances: Vec<report::InstanceDetail<'a>>,
        }
        write(
            cfg.output_dir
                .join(format!("details.{}.json", file_stem(&eval.report.system_id))),
            &Details {
                run: &run,
                system_id: &eval.report.system_id,
                instances: report::instance_details(&eval.results),
            },
        )?;
    }
    write(
        cfg.output_dir.join("summary.json"),
        &EvaluateSummary {
            run: &run,
            instances: dataset.instances.len(),
            seen,
            unseen,
            systems: &reports,
            dangling_generations: dangling
                .iter()
                .map(|d| DanglingRow { instance_id: &d.instance_id, system_id: &d.system_id })
                .collect(),
        },
    )?;

    let mut out = report::summary_table(&reports);
    let _ = writeln!(
        out,
        "{} instances ({seen} seen, {unseen} unseen); backend {}; seed {}; config {}",
        dataset.instances.len(),
        run.backend,
        run.seed,
        &run.config_hash[..12]
    );
    Ok(out)
}

#[derive(Serialize)]
struct ValidationReport<'a> {
    run: &'a RunInfo,
    instances: usize,
    excluded: usize,
    failed_positive: usize,
    failed_negative: usize,
    /// Percentage of instances failing validation.
    exclusion_rate: Option<f64>,
    outcomes: &'a [ValidationOutcome],
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<String, CliError> {
    let dataset = load_dataset(cfg)?;
    let refs = dataset.build_refs(cfg.negative_options())?;
    let nli = cfg.backend()?;
    let run = RunInfo::new(cfg.fingerprint()?, cfg.seed, nli.identity());
    let outcomes = in_pool(cfg, || {
        Ok(pipeline::validate_all(&dataset, &refs, &nli, cfg.augmentation)?)
    })?;
    let excluded = outcomes.iter().filter(|o| !o.passed).count();
    let total = outcomes.len();
    let exclusion_rate = (total > 0).then(|| 100.0 * excluded as f64 / total as f64);
    write(
        cfg.output_dir.join("validation.json"),
        &ValidationReport {
            run: &run,
            instances: total,
            excluded,
            failed_positive: outcomes.iter().filter(|o| o.failed_positive).count(),
            failed_negative: outcomes.iter().filter(|o| o.failed_negative).count(),
            exclusion_rate,
            outcomes: &outcomes,
        },
    )?;
    Ok(format!(
        "{} of {total} instances fail validation; exclusion rate {}\n",
        excluded,
        exclusion_rate.map_or_else(|| "-".to_string(), |r| format!("{r:.1}%"))
    ))
}

pub fn cmd_rerank(cfg: &RunConfig) -> Result<String, CliError> {
    let dataset = load_dataset(cfg)?;
    let (generations, _) = load_generations(cfg, &dataset)?;
    let refs = dataset.build_refs(cfg.negative_options())?;
    let nli = cfg.backend()?;
    let outcomes = in_pool(cfg, || {
        Ok(pipeline::rerank_all(&dataset, &refs, &generations, &nli, cfg.augmentation)?)
    })?;
    let merged: Vec<EnsembleGeneration> = outcomes.iter().map(EnsembleGeneration::from_outcome).collect();
    // a bare array, so the file can be fed back in as generations
    write(cfg.output_dir.join("ensemble_generations.json"), &merged)?;
    let run = RunInfo::new(cfg.fingerprint()?, cfg.seed, nli.identity());
    let scores: Vec<_> = outcomes.iter().flat_map(|o| &o.scores).collect();
    write(
        cfg.output_dir.join("rerank.json"),
        &serde_json::json!({ "run": run, "scores": scores }),
    )?;

    let mut wins: BTreeMap<&str, usize> = BTreeMap::new();
    for m in &merged {
        *wins.entry(m.source_system.as_str()).or_default() += 1;
    }
    let mut out = format!("ensemble over {} instances;", merged.len());
    for (system, n) in wins {
        let _ = write!(out, " {system}={n}");
    }
    out.push('\n');
    Ok(out)
}

pub fn cmd_robustness(cfg: &RunConfig) -> Result<String, CliError> {
    if cfg.variants.is_empty() {
        return Err(CliError::Usage("at least one --variants schema file is required".into()));
    }
    let dataset = load_dataset(cfg)?;
    let nli = cfg.backend()?;
    let run = RunInfo::new(cfg.fingerprint()?, cfg.seed, nli.identity());
    let mut variants = Vec::with_capacity(cfg.variants.len());
    for path in &cfg.variants {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        variants.push((id, data::parse_schemas(path)?));
    }
    let reports = in_pool(cfg, || {
        variants
            .iter()
            .map(|(id, catalog)| {
                run_robustness(
                    id,
                    &dataset.instances,
                    catalog,
                    &nli,
                    cfg.negative_options(),
                    cfg.augmentation,
                )
                .map_err(CliError::from)
            })
            .collect::<Result<Vec<RobustnessReport>, _>>()
    })?;
    #[derive(Serialize)]
    struct Out<'a> {
        run: &'a RunInfo,
        reports: &'a [RobustnessReport],
    }
    write(
        cfg.output_dir.join("robustness.json"),
        &Out { run: &run, reports: &reports },
    )?;
    let mut out = format!("{:<24} {:>9} {:>7} {:>8}\n", "variant", "precision", "recall", "f1");
    for r in &reports {
        let _ = writeln!(out, "{r}");
    }
    Ok(out)
}

pub fn cmd_build_refs(cfg: &RunConfig) -> Result<String, CliError> {
    let dataset = load_dataset(cfg)?;
    let refs = dataset.build_refs(cfg.negative_options())?;
    let run = RunInfo::new(cfg.fingerprint()?, cfg.seed, "none".to_string());

    #[derive(Serialize)]
    struct ActionDump<'a> {
        action_index: usize,
        intent: &'a str,
        slot: Option<&'a str>,
        values: &'a [String],
        candidates: &'a [crate::refs::CandidateReference],
        negatives: &'a [crate::refs::NegativeReference],
    }
    #[derive(Serialize)]
    struct InstanceDump<'a> {
        instance_id: &'a str,
        actions: Vec<ActionDump<'a>>,
    }
    #[derive(Serialize)]
    struct Dump<'a> {
        run: &'a RunInfo,
        instances: Vec<InstanceDump<'a>>,
    }
    let instances = dataset
        .instances
        .iter()
        .zip(&refs)
        .map(|(inst, r)| InstanceDump {
            instance_id: &inst.instance_id,
            actions: inst
                .actions
                .iter()
                .zip(&r.actions)
                .enumerate()
                .map(|(i, (a, ar))| ActionDump {
                    action_index: i,
                    intent: &a.intent,
                    slot: a.slot.as_deref(),
                    values: &a.values,
                    candidates: &ar.candidates,
                    negatives: &ar.negatives,
                })
                .collect(),
        })
        .collect();
    write(cfg.output_dir.join("refs.json"), &Dump { run: &run, instances })?;
    let candidates: usize = refs.iter().flat_map(|r| &r.actions).map(|a| a.candidates.len()).sum();
    let negatives: usize = refs.iter().flat_map(|r| &r.actions).map(|a| a.negatives.len()).sum();
    Ok(format!(
        "{} instances; {candidates} candidate and {negatives} negative references\n",
        refs.len()
    ))
}
