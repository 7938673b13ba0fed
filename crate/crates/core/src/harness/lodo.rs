//! Leave-one-domain-out evaluation and the domain-shift variants.

use std::collections::BTreeSet;

use log::info;
use nnkernel::Network;
use serde::{Deserialize, Serialize};

use super::metrics::{per_attribute_accuracy, random_row, AttributeAccuracy};
use super::table::{ResultRow, ResultTable};
use crate::baselines::{train_kennen, train_linear_svm, train_mmd, BaselineConfig};
use crate::dream::{
    select_lambda, train_dream, AttrLabels, DreamConfig, EpochMetrics, FingerprintMeta, Pipeline, TrainingSet,
};
use crate::error::{Error, Result};
use crate::fingerprint::{build_query_set, collect_zoo, restrict_classes, FingerprintSet};
use crate::par;
use crate::seed;
use crate::zoo::{disjoint_attribute_split, AttributeGrid, AttributeVector, DomainData, ModelStatus, ModelZoo, Split, SplitSizes};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dream,
    Kennen,
    Mmd,
    Svm,
    /// Analytic uniform guess.
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Dream, Method::Kennen, Method::Mmd, Method::Svm, Method::Random];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dream => "dream",
            Method::Kennen => "kennen",
            Method::Mmd => "mmd",
            Method::Svm => "svm",
            Method::Random => "random",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown method `{s}`")))
    }
}

/// Hyperparameters of every method.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MethodSettings {
    pub dream: DreamConfig,
    pub baselines: BaselineConfig,
}

/// The white-box side of an experiment.
#[derive(Clone, Copy)]
pub struct Experiment<'a> {
    pub datasets: &'a [DomainData],
    pub zoo: &'a ModelZoo,
    pub networks: &'a [Network],
    pub domain_names: &'a [String],
}

impl Experiment<'_> {
    fn name(&self, d: usize) -> String {
        self.domain_names.get(d).cloned().unwrap_or_else(|| format!("domain{d}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    /// Each target is evaluated with every other domain as a source.
    pub targets: Vec<usize>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    /// Query count N.
    pub queries: usize,
    /// Classes kept at training time (class-subset mode).
    pub class_subset: Option<Vec<usize>>,
    /// Cap on training models per source domain.
    pub train_limit: Option<usize>,
    /// Appended to method names in the table.
    pub tag: String,
}

impl ExperimentPlan {
    /// Every domain in turn as the target.
    pub fn rotation(domains: usize, methods: Vec<Method>, trials: usize, queries: usize, seed: u64) -> Self {
        Self {
            targets: (0..domains).collect(),
            methods,
            trials,
            seed,
            queries,
            class_subset: None,
            train_limit: None,
            tag: String::new(),
        }
    }

    pub fn validate(&self, domains: usize) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::validation("trial count must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::validation("no methods requested"));
        }
        if self.targets.is_empty() {
            return Err(Error::validation("no target domains"));
        }
        if let Some(t) = self.targets.iter().find(|&&t| t >= domains) {
            return Err(Error::validation(format!("target domain {t} does not exist ({domains} domains)")));
        }
        if domains < 2 {
            return Err(Error::validation("leave-one-domain-out needs at least two domains"));
        }
        Ok(())
    }

    pub fn sources(&self, target: usize, domains: usize) -> Vec<usize> {
        (0..domains).filter(|&d| d != target).collect()
    }
}

/// One trained method in one trial of one rotation.
pub struct TrainedMethod {
    pub method: Method,
    pub trial: usize,
    pub pipeline: Option<Pipeline>,
    pub history: Vec<EpochMetrics>,
    pub accuracy: AttributeAccuracy,
    pub predictions: Vec<AttrLabels>,
}

pub struct Rotation {
    pub target: usize,
    pub sources: Vec<usize>,
    /// Fingerprints of every usable model on this rotation's query set
    /// (already restricted in class-subset mode).
    pub fingerprints: FingerprintSet,
    pub train_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub runs: Vec<TrainedMethod>,
}

pub struct LodoRun {
    pub table: ResultTable,
    pub rotations: Vec<Rotation>,
}

/// Rejects any row that is from the target domain or not in `split`.
pub fn audit_rows(zoo: &ModelZoo, ids: &[usize], target: usize, split: Split) -> Result<()> {
    for &id in ids {
        let r = zoo
            .record(id)
            .ok_or_else(|| Error::validation(format!("model {id} is not in the zoo")))?;
        if r.domain == target {
            return Err(Error::validation(format!(
                "leakage: target-domain model {id} reached a {split} path"
            )));
        }
        if r.split != split {
            return Err(Error::validation(format!("model {id} is tagged {} but used as {split}", r.split)));
        }
    }
    Ok(())
}

/// Model ids of one rotation: source train and val rows (train capped at
/// `train_limit` per domain) and the target's test rows. Audited for
/// leakage before they are returned.
pub fn rotation_ids(
    zoo: &ModelZoo,
    target: usize,
    train_limit: Option<usize>,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    if target >= zoo.domains {
        return Err(Error::validation(format!("target domain {target} does not exist")));
    }
    let sources: Vec<usize> = (0..zoo.domains).filter(|&d| d != target).collect();
    let train_ids = ids_in(zoo, &sources, Split::Train, train_limit);
    let val_ids = ids_in(zoo, &sources, Split::Val, None);
    let test_ids = ids_in(zoo, &[target], Split::Test, None);
    if let Some(limit) = train_limit {
        for &d in &sources {
            let have = zoo.records_in(d, Split::Train).filter(|r| r.status == ModelStatus::Ok).count();
            if have < limit {
                return Err(Error::validation(format!(
                    "domain {d} has {have} training models, {limit} requested"
                )));
            }
        }
    }
    for (ids, what) in [(&train_ids, "train"), (&val_ids, "val"), (&test_ids, "test")] {
        if ids.is_empty() {
            return Err(Error::validation(format!("missing {what} split for target domain {target}")));
        }
    }
    audit_rows(zoo, &train_ids, target, Split::Train)?;
    audit_rows(zoo, &val_ids, target, Split::Val)?;
    Ok((train_ids, val_ids, test_ids))
}

fn ids_in(zoo: &ModelZoo, domains: &[usize], split: Split, limit: Option<usize>) -> Vec<usize> {
    let mut out = Vec::new();
    for &d in domains {
        let ids = zoo
            .records_in(d, split)
            .filter(|r| r.status == ModelStatus::Ok)
            .map(|r| r.id)
            .take(limit.unwrap_or(usize::MAX));
        out.extend(ids);
    }
    out
}

/// Fingerprints for one rotation: queries drawn only from `sources`.
pub fn rotation_fingerprints(exp: &Experiment, plan: &ExperimentPlan, target: usize) -> Result<FingerprintSet> {
    let sources = plan.sources(target, exp.zoo.domains);
    if sources.contains(&target) {
        return Err(Error::validation("leakage: the target domain is listed as a query source"));
    }
    let classes = exp.datasets.first().map_or(0, |d| d.classes);
    let subset = plan.class_subset.as_deref();
    let queries = build_query_set(
        exp.datasets,
        &sources,
        plan.queries,
        subset,
        seed::derive_labeled(plan.seed, "queries", target as u64),
    )?;
    let set = collect_zoo(exp.zoo, exp.networks, &queries, classes)?;
    match subset {
        Some(s) => restrict_classes(&set, s),
        None => Ok(set),
    }
}

/// Evaluates `value` candidates by validation accuracy; ties go to the
/// first (smallest) value.
fn pick_best(values: &[f64], mut score: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &v in values {
        let s = score(v)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((v, s));
        }
    }
    best.map(|b| b.0).ok_or_else(|| Error::validation("empty tuning grid"))
}

fn sorted_grid(grid: &[f64]) -> Vec<f64> {
    let mut v = grid.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Per-attribute accuracy of `pipeline` on labeled rows, with the predictions.
pub fn evaluate(pipeline: &Pipeline, data: &TrainingSet) -> Result<(AttributeAccuracy, Vec<AttrLabels>)> {
    let pred: Vec<AttrLabels> = pipeline.predict(&data.features)?.into_iter().map(|p| p.labels).collect();
    Ok((per_attribute_accuracy(&pred, &data.labels)?, pred))
}

/// Trains one method on the source rows, tuning on `val` when enabled.
pub fn train_method(
    method: Method,
    train: &TrainingSet,
    val: &TrainingSet,
    meta: FingerprintMeta,
    settings: &MethodSettings,
    seed: u64,
) -> Result<(Option<Pipeline>, Vec<EpochMetrics>)> {
    let dream = &settings.dream;
    let base = &settings.baselines;
    let trained = match method {
        Method::Random => return Ok((None, Vec::new())),
        Method::Svm => return Ok((Some(train_linear_svm(train, meta, &base.svm, seed)?), Vec::new())),
        Method::Dream => {
            let lambda = if dream.tune_lambda {
                select_lambda(train, val, meta, dream, &dream.lambda_grid, seed)?.0
            } else {
                dream.lambda
            };
            train_dream(train, meta, dream, lambda, seed)?
        }
        Method::Kennen => train_kennen(train, meta, &base.classifier_config(dream), seed)?,
        Method::Mmd => {
            let cfg = base.classifier_config(dream);
            let gamma = if base.tune_gamma {
                pick_best(&sorted_grid(&base.mmd_gamma_grid), |g| {
                    let t = train_mmd(train, meta, &cfg, g, base.mmd_sigma, seed)?;
                    Ok(evaluate(&t.pipeline, val)?.0.average)
                })?
            } else {
                base.mmd_gamma
            };
            train_mmd(train, meta, &cfg, gamma, base.mmd_sigma, seed)?
        }
    };
    Ok((Some(trained.pipeline), trained.history))
}

/// Seed shared by every method in one (trial, target) cell, so methods
/// are compared on paired randomness.
pub fn trial_seed(plan_seed: u64, trial: usize, target: usize) -> u64 {
    seed::derive(seed::derive_labeled(plan_seed, "trial", trial as u64), target as u64)
}

/// Runs the plan: per target, fingerprints on source-only queries; per
/// trial, each method trained on source train rows, tuned on source val
/// rows and scored on the target's test rows.
pub fn run_lodo(exp: &Experiment, plan: &ExperimentPlan, settings: &MethodSettings) -> Result<LodoRun> {
    let m_all = exp.zoo.domains;
    plan.validate(m_all)?;
    if exp.networks.len() != exp.zoo.records.len() {
        return Err(Error::validation("zoo records and networks differ in length"));
    }
    let mut rotations = Vec::with_capacity(plan.targets.len());
    for &target in &plan.targets {
        let sources = plan.sources(target, m_all);
        let fingerprints = rotation_fingerprints(exp, plan, target)?;
        let (train_ids, val_ids, test_ids) = rotation_ids(exp.zoo, target, plan.train_limit)?;
        rotations.push(Rotation {
            target,
            sources,
            fingerprints,
            train_ids,
            val_ids,
            test_ids,
            runs: Vec::new(),
        });
    }

    let mut jobs = Vec::new();
    for (ri, _) in rotations.iter().enumerate() {
        for trial in 0..plan.trials {
            for &method in &plan.methods {
                jobs.push((ri, trial, method));
            }
        }
    }
    let grid_hash = exp.zoo.grid_hash;
    let results = par::map(&jobs, |&(ri, trial, method)| -> Result<TrainedMethod> {
        let rot = &rotations[ri];
        let set = &rot.fingerprints;
        let meta = FingerprintMeta::of(set, grid_hash);
        let train = TrainingSet::from_fingerprints(set, &rot.train_ids, &rot.sources)?;
        let val = TrainingSet::from_fingerprints(set, &rot.val_ids, &rot.sources)?;
        let test = TrainingSet::from_fingerprints(set, &rot.test_ids, &[rot.target])?;
        let seed = trial_seed(plan.seed, trial, rot.target);
        let (pipeline, history) = train_method(method, &train, &val, meta, settings, seed)?;
        let (accuracy, predictions) = match &pipeline {
            Some(p) => evaluate(p, &test)?,
            None => (random_row(), Vec::new()),
        };
        info!(
            "target {} trial {trial} {method}: average {:.2}",
            exp.name(rot.target),
            accuracy.average
        );
        Ok(TrainedMethod {
            method,
            trial,
            pipeline,
            history,
            accuracy,
            predictions,
        })
    });
    let mut table = ResultTable::default();
    for (&(ri, _, _), r) in jobs.iter().zip(results) {
        let r = r?;
        table.push(ResultRow {
            method: format!("{}{}", r.method, plan.tag),
            target: exp.name(rotations[ri].target),
            trial: r.trial,
            accuracy: r.accuracy.clone(),
        });
        rotations[ri].runs.push(r);
    }
    table.check()?;
    Ok(LodoRun { table, rotations })
}

/// Domain-shift scenarios on top of the standard protocol.
#[derive(Clone, Debug, PartialEq)]
pub enum ShiftMode {
    /// Training-time classes; fingerprints are compared over these only.
    ClassSubset(Vec<usize>),
    /// Train/val/test models get pairwise-disjoint attribute combinations.
    DisjointCombinations { sizes: SplitSizes, split_seed: u64 },
}

/// Attribute combinations that occur in more than one split.
pub fn shared_combinations(zoo: &ModelZoo) -> Vec<AttributeVector> {
    let sets: Vec<BTreeSet<[usize; 9]>> = Split::USED
        .iter()
        .map(|&s| zoo.records.iter().filter(|r| r.split == s).map(|r| r.attrs.indices()).collect())
        .collect();
    let mut shared = BTreeSet::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            shared.extend(sets[i].intersection(&sets[j]).copied());
        }
    }
    shared
        .into_iter()
        .map(|i| AttributeVector::from_indices(i).expect("indices come from valid vectors"))
        .collect()
}

pub fn run_domain_shift(
    exp: &Experiment,
    plan: &ExperimentPlan,
    settings: &MethodSettings,
    mode: &ShiftMode,
    grid: &AttributeGrid,
) -> Result<LodoRun> {
    match mode {
        ShiftMode::ClassSubset(classes) => {
            if classes.is_empty() {
                return Err(Error::validation("the shared class set is empty"));
            }
            let plan = ExperimentPlan {
                class_subset: Some(classes.clone()),
                tag: format!("{}*", plan.tag),
                ..plan.clone()
            };
            run_lodo(exp, &plan, settings)
        }
        ShiftMode::DisjointCombinations { sizes, split_seed } => {
            let mut zoo = exp.zoo.clone();
            disjoint_attribute_split(&mut zoo, grid, *sizes, *split_seed)?;
            let shared = shared_combinations(&zoo);
            if !shared.is_empty() {
                return Err(Error::validation(format!(
                    "{} attribute combinations appear in more than one split",
                    shared.len()
                )));
            }
            let plan = ExperimentPlan {
                tag: format!("{}**", plan.tag),
                ..plan.clone()
            };
            let exp = Experiment { zoo: &zoo, ..*exp };
            run_lodo(&exp, &plan, settings)
        }
    }
}
