//! On-disk layout of a run and the stage functions the CLI drives.
//!
//! ```text
//! <out>/data/domain_<d>.bin
//! <out>/zoo/manifest.csv, <out>/zoo/models/*.ckpt
//! <out>/fingerprints/target_<d>.fp
//! <out>/pipelines/<method>_target<d>_trial<k>.bin
//! <out>/results/*.csv, *.txt
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use nnkernel::Network;

use crate::config::Config;
use crate::dream::{AttrLabels, FingerprintMeta, Pipeline, TrainingSet};
use crate::error::{Error, Result};
use crate::fingerprint::{read_fingerprints, write_fingerprints, FingerprintSet};
use crate::harness::{
    domain_probe, evaluate, rotation_fingerprints, rotation_ids, AttributeAccuracy, Experiment, ExperimentPlan,
    LodoRun, ProbeConfig, ProbeResult,
};
use crate::seed;
use crate::zoo::{
    gen_synthetic_domains, load_networks, plan_zoo, read_domain, read_manifest, save_checkpoints, split_zoo,
    train_zoo, write_domain, write_manifest, AttributeGrid, DomainData, ModelStatus, ModelZoo, Split, NUM_ATTRIBUTES,
};

#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn data(&self, domain: usize) -> PathBuf {
        self.root.join("data").join(format!("domain_{domain}.bin"))
    }

    pub fn zoo_dir(&self) -> PathBuf {
        self.root.join("zoo")
    }

    pub fn manifest(&self) -> PathBuf {
        self.zoo_dir().join("manifest.csv")
    }

    pub fn fingerprints(&self, target: usize) -> PathBuf {
        self.root.join("fingerprints").join(format!("target_{target}.fp"))
    }

    pub fn pipeline(&self, method: &str, target: usize, trial: usize) -> PathBuf {
        self.root
            .join("pipelines")
            .join(format!("{method}_target{target}_trial{trial}.bin"))
    }

    pub fn results(&self, name: &str) -> PathBuf {
        self.root.join("results").join(name)
    }
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn generate_data(cfg: &Config, layout: &Layout) -> Result<Vec<DomainData>> {
    let data = gen_synthetic_domains(seed::derive_labeled(cfg.seed, "data", 0), &cfg.data.specs())?;
    for d in &data {
        let path = layout.data(d.domain);
        ensure_parent(&path)?;
        write_domain(&path, d)?;
    }
    Ok(data)
}

pub fn load_data(cfg: &Config, layout: &Layout) -> Result<Vec<DomainData>> {
    let data: Vec<DomainData> = (0..cfg.data.domains.len())
        .map(|d| read_domain(&layout.data(d)))
        .collect::<Result<_>>()?;
    for (d, dd) in data.iter().enumerate() {
        if dd.domain != d || dd.classes != cfg.data.classes || dd.side != cfg.data.side {
            return Err(Error::incompatible(format!(
                "{} does not match the configured domain {d} (C={}, side {})",
                layout.data(d).display(),
                cfg.data.classes,
                cfg.data.side
            )));
        }
    }
    Ok(data)
}

/// Trains the white-box zoo and writes checkpoints plus an unsplit manifest.
pub fn build_zoo(cfg: &Config, layout: &Layout, data: &[DomainData]) -> Result<(ModelZoo, Vec<Network>)> {
    let plan = plan_zoo(
        seed::derive_labeled(cfg.seed, "zoo", 0),
        &AttributeGrid::full(),
        data.len(),
        cfg.zoo.models_per_domain,
        cfg.data.classes,
        cfg.data.side,
        cfg.zoo.train.widths(),
    )?;
    let mut tz = train_zoo(&plan, data, &cfg.zoo.train)?;
    let dir = layout.zoo_dir();
    save_checkpoints(&dir, &mut tz)?;
    write_manifest(&layout.manifest(), &tz.zoo)?;
    Ok((tz.zoo, tz.networks))
}

/// Standard train/val/test assignment, sized by the domain with the fewest
/// usable models.
pub fn standard_split(cfg: &Config, zoo: &mut ModelZoo) -> Result<()> {
    let usable = (0..zoo.domains)
        .map(|d| {
            zoo.records
                .iter()
                .filter(|r| r.domain == d && r.status == ModelStatus::Ok)
                .count()
        })
        .min()
        .unwrap_or(0);
    let sizes = cfg.zoo.split_sizes(usable)?;
    split_zoo(zoo, sizes, seed::derive_labeled(cfg.seed, "split", 0))
}

pub fn load_zoo(layout: &Layout) -> Result<(ModelZoo, Vec<Network>)> {
    let zoo = read_manifest(&layout.manifest())?;
    let networks = load_networks(&layout.zoo_dir(), &zoo)?;
    Ok((zoo, networks))
}

/// Everything the evaluation needs, loaded from a layout.
pub struct Workspace {
    pub data: Vec<DomainData>,
    pub zoo: ModelZoo,
    pub networks: Vec<Network>,
    pub names: Vec<String>,
}

impl Workspace {
    pub fn load(cfg: &Config, layout: &Layout) -> Result<Self> {
        let data = load_data(cfg, layout)?;
        let (zoo, networks) = load_zoo(layout)?;
        if zoo.domains != data.len() {
            return Err(Error::incompatible(format!(
                "zoo has {} domains, config has {}",
                zoo.domains,
                data.len()
            )));
        }
        Ok(Self {
            data,
            zoo,
            networks,
            names: cfg.data.names(),
        })
    }

    pub fn experiment(&self) -> Experiment<'_> {
        Experiment {
            datasets: &self.data,
            zoo: &self.zoo,
            networks: &self.networks,
            domain_names: &self.names,
        }
    }
}

/// Collects and writes the fingerprint file of each target's rotation.
pub fn write_rotation_fingerprints(
    ws: &Workspace,
    plan: &ExperimentPlan,
    layout: &Layout,
) -> Result<Vec<PathBuf>> {
    let exp = ws.experiment();
    plan.targets
        .iter()
        .map(|&t| {
            let set = rotation_fingerprints(&exp, plan, t)?;
            let path = layout.fingerprints(t);
            ensure_parent(&path)?;
            write_fingerprints(&path, &set)?;
            info!("wrote {} ({} rows)", path.display(), set.rows.len());
            Ok(path)
        })
        .collect()
}

/// Labeled training, tuning and evaluation rows of one rotation, read from
/// its fingerprint file.
pub struct RotationData {
    pub target: usize,
    pub sources: Vec<usize>,
    pub set: FingerprintSet,
    pub meta: FingerprintMeta,
    pub train: TrainingSet,
    pub val: TrainingSet,
    pub test: TrainingSet,
}

impl RotationData {
    pub fn load(zoo: &ModelZoo, path: &Path, target: usize, train_limit: Option<usize>) -> Result<Self> {
        let set = read_fingerprints(path)?;
        Self::from_set(zoo, set, target, train_limit)
    }

    pub fn from_set(zoo: &ModelZoo, set: FingerprintSet, target: usize, train_limit: Option<usize>) -> Result<Self> {
        if set.domains != zoo.domains {
            return Err(Error::incompatible(format!(
                "fingerprints cover {} domains, the zoo has {}",
                set.domains, zoo.domains
            )));
        }
        let (train_ids, val_ids, test_ids) = rotation_ids(zoo, target, train_limit)?;
        let sources: Vec<usize> = (0..zoo.domains).filter(|&d| d != target).collect();
        Ok(Self {
            target,
            meta: FingerprintMeta::of(&set, zoo.grid_hash),
            train: TrainingSet::from_fingerprints(&set, &train_ids, &sources)?,
            val: TrainingSet::from_fingerprints(&set, &val_ids, &sources)?,
            test: TrainingSet::from_fingerprints(&set, &test_ids, &[target])?,
            sources,
            set,
        })
    }

    pub fn evaluate(&self, pipeline: &Pipeline) -> Result<(AttributeAccuracy, Vec<AttrLabels>)> {
        pipeline.check_compatible(&self.set, self.meta.grid_hash)?;
        evaluate(pipeline, &self.test)
    }
}

/// One line per model: id, the nine true value indices, the nine predicted.
pub fn predictions_csv(ids: &[usize], truth: &[AttrLabels], pred: &[AttrLabels]) -> String {
    let mut out = String::from("model_id");
    for p in ["true", "pred"] {
        for a in 0..NUM_ATTRIBUTES {
            let _ = write!(out, ",{p}{a}");
        }
    }
    out.push('\n');
    for ((id, t), p) in ids.iter().zip(truth).zip(pred) {
        let _ = write!(out, "{id}");
        for v in t.iter().chain(p) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Writes the CSV and aligned-text renderings of a run's table.
pub fn write_run_tables(layout: &Layout, name: &str, run: &LodoRun) -> Result<()> {
    write_text(&layout.results(&format!("{name}.csv")), &run.table.to_csv())?;
    write_text(&layout.results(&format!("{name}.txt")), &run.table.to_text())
}

/// Source-domain models outside the training split of `target`'s rotation.
pub fn heldout_source_ids(zoo: &ModelZoo, target: usize) -> Vec<usize> {
    zoo.records
        .iter()
        .filter(|r| r.domain != target && r.status == ModelStatus::Ok && matches!(r.split, Split::Val | Split::Test))
        .map(|r| r.id)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeComparison {
    pub raw: ProbeResult,
    pub embedded: ProbeResult,
}

/// Domain probe on the raw fingerprints and on the pipeline's embeddings
/// of the same held-out source rows.
pub fn probe_rotation(
    zoo: &ModelZoo,
    set: &FingerprintSet,
    target: usize,
    pipeline: &Pipeline,
    cfg: &ProbeConfig,
    seed: u64,
) -> Result<ProbeComparison> {
    pipeline.check_compatible(set, zoo.grid_hash)?;
    let ids = heldout_source_ids(zoo, target);
    let sources: Vec<usize> = (0..zoo.domains).filter(|&d| d != target).collect();
    let domains: Vec<usize> = ids
        .iter()
        .map(|&id| {
            let d = zoo.record(id).map(|r| r.domain).unwrap_or(target);
            sources.iter().position(|&s| s == d).unwrap_or(0)
        })
        .collect();
    let x = set.matrix(&ids)?;
    let z = pipeline.embed(&x)?;
    Ok(ProbeComparison {
        raw: domain_probe(&x, &domains, cfg, seed)?,
        embedded: domain_probe(&z, &domains, cfg, seed)?,
    })
}
