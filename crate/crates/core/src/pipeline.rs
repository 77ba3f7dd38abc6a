//! Dataset-level drivers shared by the CLI and the C API.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::data::{
    self, DataError, EvalInstance, GenerationCandidate, SchemaCatalog, ValuePool,
};
use crate::eval::{
    evaluate_instance, metric_report, prepare_instance, validate_instance, EvalError,
    EvalOptions, InstanceResult, MetricReport, PreparedInstance, ValidationOutcome,
};
use crate::nli::NliBackend;
use crate::refs::{build_instance_refs, InstanceRefs, NegativeOptions, RefError};
use crate::rerank::{rerank, RerankOutcome};

/// Schemas, instances and the value pool derived from them.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub catalog: SchemaCatalog,
    pub instances: Vec<EvalInstance>,
    pub pool: ValuePool,
}

impl Dataset {
    pub fn new(catalog: SchemaCatalog, instances: Vec<EvalInstance>) -> Self {
        let pool = ValuePool::build(&catalog, &instances);
        Self {
            catalog,
            instances,
            pool,
        }
    }

    pub fn load(
        schemas: &Path,
        instances: &Path,
        unseen_domains: &[String],
    ) -> Result<Self, DataError> {
        let catalog = data::parse_schemas(schemas)?;
        let instances = data::parse_instances(instances, &catalog, unseen_domains)?;
        Ok(Self::new(catalog, instances))
    }

    pub fn build_refs(&self, opts: NegativeOptions) -> Result<Vec<InstanceRefs>, RefError> {
        self.instances
            .iter()
            .map(|i| build_instance_refs(i, &self.catalog, &self.pool, opts))
            .collect()
    }

    pub fn seen_unseen_counts(&self) -> (usize, usize) {
        let unseen = self.instances.iter().filter(|i| i.is_unseen_domain).count();
        (self.instances.len() - unseen, unseen)
    }
}

pub fn prepare_all<B: NliBackend + ?Sized>(
    dataset: &Dataset,
    refs: &[InstanceRefs],
    nli: &B,
    opts: EvalOptions,
) -> Result<Vec<PreparedInstance>, EvalError> {
    dataset
        .instances
        .par_iter()
        .zip(refs.par_iter())
        .map(|(inst, r)| prepare_instance(inst, r, nli, opts))
        .collect()
}

pub fn validate_all<B: NliBackend + ?Sized>(
    dataset: &Dataset,
    refs: &[InstanceRefs],
    nli: &B,
    augmentation: bool,
) -> Result<Vec<ValidationOutcome>, EvalError> {
    dataset
        .instances
        .par_iter()
        .zip(refs.par_iter())
        .map(|(inst, r)| validate_instance(inst, r, nli, augmentation))
        .collect()
}

/// Per-instance results and aggregate metrics for one system.
#[derive(Debug, Clone)]
pub struct SystemEvaluation {
    pub report: MetricReport,
    pub results: Vec<InstanceResult>,
}

/// Evaluates one system's generations. Instances without a generation are
/// counted in `missing_generations`; when an instance has several generations
/// from the same system the last one is used.
pub fn evaluate_system<B: NliBackend + ?Sized>(
    dataset: &Dataset,
    refs: &[InstanceRefs],
    prepared: &[PreparedInstance],
    system_id: &str,
    generations: &[GenerationCandidate],
    nli: &B,
    opts: EvalOptions,
) -> Result<SystemEvaluation, EvalError> {
    let mut by_instance: BTreeMap<&str, &GenerationCandidate> = BTreeMap::new();
    for g in generations.iter().filter(|g| g.system_id == system_id) {
        if by_instance.insert(g.instance_id.as_str(), g).is_some() {
            log::warn!(
                "system `{system_id}` has several generations for `{}`; using the last",
                g.instance_id
            );
        }
    }
    let work: Vec<(usize, &GenerationCandidate)> = dataset
        .instances
        .iter()
        .enumerate()
        .filter_map(|(i, inst)| by_instance.get(inst.instance_id.as_str()).map(|g| (i, *g)))
        .collect();
    let missing = dataset.instances.len() - work.len();
    let results = work
        .par_iter()
        .map(|(i, g)| {
            evaluate_instance(
                g,
                &dataset.instances[*i],
                &refs[*i],
                &prepared[*i],
                &dataset.catalog,
                nli,
                opts,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = metric_report(system_id, &results, opts.validation, missing);
    Ok(SystemEvaluation { report, results })
}

/// Reranks every instance that has at least one generation.
pub fn rerank_all<B: NliBackend + ?Sized>(
    dataset: &Dataset,
    refs: &[InstanceRefs],
    generations: &[GenerationCandidate],
    nli: &B,
    augmentation: bool,
) -> Result<Vec<RerankOutcome>, EvalError> {
    let mut by_instance: BTreeMap<&str, Vec<GenerationCandidate>> = BTreeMap::new();
    for g in generations {
        by_instance.entry(g.instance_id.as_str()).or_default().push(g.clone());
    }
    let work: Vec<(usize, Vec<GenerationCandidate>)> = dataset
        .instances
        .iter()
        .enumerate()
        .filter_map(|(i, inst)| {
            by_instance
                .remove(inst.instance_id.as_str())
                .map(|cands| (i, cands))
        })
        .collect();
    work.par_iter()
        .map(|(i, cands)| rerank(cands, &dataset.instances[*i], &refs[*i], nli, augmentation))
        .collect()
}
