//! Zoo planning and white-box training.

use std::path::Path;

use log::{debug, warn};
use nnkernel::{softmax_cross_entropy, Init, Mode, Network, NnError, Optimizer, OptimizerKind};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::arch::{build_model, ArchWidths};
use super::attributes::{AttributeGrid, AttributeVector};
use super::data::DomainData;
use super::manifest::{ModelRecord, ModelStatus, ModelZoo, Split};
use crate::error::{Error, Result};
use crate::{par, seed};

#[derive(Clone, Debug, PartialEq)]
pub struct PlannedModel {
    pub id: usize,
    pub domain: usize,
    pub attrs: AttributeVector,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZooPlan {
    pub models: Vec<PlannedModel>,
    pub domains: usize,
    pub grid_hash: u64,
    pub seed: u64,
}

/// Grid members whose architecture is buildable at `side`.
pub fn buildable(grid: &AttributeGrid, classes: usize, side: usize, widths: ArchWidths) -> Vec<AttributeVector> {
    grid.enumerate()
        .into_iter()
        .filter(|a| build_model(a, classes, side, widths).is_ok())
        .collect()
}

/// Samples `per_domain` attribute vectors per domain uniformly (with
/// replacement) from the buildable part of `grid`. Model ids run
/// domain-major; each model's seed is derived from `(seed, id)`.
pub fn plan_zoo(
    seed: u64,
    grid: &AttributeGrid,
    domains: usize,
    per_domain: usize,
    classes: usize,
    side: usize,
    widths: ArchWidths,
) -> Result<ZooPlan> {
    if domains < 2 {
        return Err(Error::validation("a zoo needs at least two domains"));
    }
    let pool = buildable(grid, classes, side, widths);
    if pool.is_empty() {
        return Err(Error::validation(format!("no grid member is buildable on {side}x{side} input")));
    }
    if pool.len() < grid.len() {
        debug!("{} of {} grid members excluded (spatial collapse at side {side})", grid.len() - pool.len(), grid.len());
    }
    let mut models = Vec::with_capacity(domains * per_domain);
    for domain in 0..domains {
        let mut rng = seed::rng(seed::derive_labeled(seed, "plan", domain as u64));
        for k in 0..per_domain {
            let id = domain * per_domain + k;
            models.push(PlannedModel {
                id,
                domain,
                attrs: pool[rng.random_range(0..pool.len())],
                seed: seed::derive_labeled(seed, "model", id as u64),
            });
        }
    }
    Ok(ZooPlan {
        models,
        domains,
        grid_hash: grid.hash(),
        seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub epochs: usize,
    pub lr_sgd: f64,
    pub lr_adam: f64,
    pub lr_rmsprop: f64,
    pub conv_channels: usize,
    pub fc_width: usize,
    pub dropout_rate: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let w = ArchWidths::default();
        Self {
            epochs: 10,
            lr_sgd: 0.05,
            lr_adam: 1e-3,
            lr_rmsprop: 1e-3,
            conv_channels: w.conv_channels,
            fc_width: w.fc_width,
            dropout_rate: w.dropout_rate,
        }
    }
}

impl TrainSettings {
    pub fn widths(&self) -> ArchWidths {
        ArchWidths {
            conv_channels: self.conv_channels,
            fc_width: self.fc_width,
            dropout_rate: self.dropout_rate,
        }
    }

    pub fn lr(&self, kind: OptimizerKind) -> f64 {
        match kind {
            OptimizerKind::Sgd => self.lr_sgd,
            OptimizerKind::Adam => self.lr_adam,
            OptimizerKind::RmsProp => self.lr_rmsprop,
        }
    }
}

pub struct TrainedModel {
    pub network: Network,
    pub val_acc: f64,
    pub status: ModelStatus,
}

/// Fraction of `indices` whose argmax prediction matches the label.
pub fn accuracy(net: &Network, data: &DomainData, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for chunk in indices.chunks(256) {
        let logits = net.infer(&data.images.select_rows(chunk))?;
        for (r, &i) in chunk.iter().enumerate() {
            if argmax(logits.row(r)) == data.labels[i] {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn train_epochs(
    net: &mut Network,
    opt: &mut Optimizer,
    data: &DomainData,
    batch_size: usize,
    epochs: usize,
    rng: &mut seed::Rng,
) -> std::result::Result<(), NnError> {
    let mut order: Vec<usize> = data.train_indices().collect();
    for _ in 0..epochs {
        order.shuffle(rng);
        for batch in order.chunks(batch_size) {
            // batch statistics are undefined for a single row
            if batch.len() < 2 {
                continue;
            }
            let x = data.images.select_rows(batch);
            let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
            let logits = net.forward(&x, Mode::Train, rng)?;
            let (loss, mut grad) = softmax_cross_entropy(&logits, &labels)?;
            if !loss.is_finite() {
                return Err(NnError::NonFinite("training loss".into()));
            }
            grad.scale(1.0 / batch.len() as f64);
            net.zero_grad();
            net.backward_params(&grad)?;
            opt.step_network(net)?;
        }
    }
    Ok(())
}

/// Trains one planned model on its domain's training rows and scores it on
/// the validation rows. Depends only on the plan entry and the data.
pub fn train_model(plan: &PlannedModel, data: &DomainData, settings: &TrainSettings) -> Result<TrainedModel> {
    let specs = build_model(&plan.attrs, data.classes, data.side, settings.widths())?;
    let mut rng = seed::rng(plan.seed);
    let mut network = Network::new(&specs, Init::KaimingUniform, &mut rng)?;
    let mut opt = Optimizer::new(plan.attrs.optimizer, settings.lr(plan.attrs.optimizer))?;
    let status = match train_epochs(&mut network, &mut opt, data, plan.attrs.batch_size, settings.epochs, &mut rng) {
        Ok(()) => ModelStatus::Ok,
        Err(NnError::NonFinite(what)) => {
            warn!("model {}: non-finite {what}, flagged", plan.id);
            ModelStatus::NonFinite
        }
        Err(e) => return Err(e.into()),
    };
    let val: Vec<usize> = data.val_indices().collect();
    let val_acc = match status {
        ModelStatus::Ok => accuracy(&network, data, &val).or_else(|e| match e {
            Error::Nn(NnError::NonFinite(_)) => Ok(0.0),
            e => Err(e),
        })?,
        ModelStatus::NonFinite => 0.0,
    };
    Ok(TrainedModel {
        network,
        val_acc,
        status,
    })
}

/// A zoo with its networks held in memory, index-aligned with the records.
pub struct TrainedZoo {
    pub zoo: ModelZoo,
    pub networks: Vec<Network>,
}

/// Trains every planned model (data-parallel across models). Records come
/// back in plan order with split `Unused`.
pub fn train_zoo(plan: &ZooPlan, datasets: &[DomainData], settings: &TrainSettings) -> Result<TrainedZoo> {
    if datasets.len() != plan.domains {
        return Err(Error::validation(format!(
            "plan has {} domains but {} datasets were given",
            plan.domains,
            datasets.len()
        )));
    }
    let trained = par::map(&plan.models, |p| train_model(p, &datasets[p.domain], settings));
    let mut records = Vec::with_capacity(plan.models.len());
    let mut networks = Vec::with_capacity(plan.models.len());
    for (p, t) in plan.models.iter().zip(trained) {
        let t = t?;
        records.push(ModelRecord {
            id: p.id,
            domain: p.domain,
            attrs: p.attrs,
            seed: p.seed,
            val_acc: t.val_acc,
            split: Split::Unused,
            status: t.status,
            checkpoint: None,
        });
        networks.push(t.network);
    }
    Ok(TrainedZoo {
        zoo: ModelZoo {
            records,
            domains: plan.domains,
            grid_hash: plan.grid_hash,
            seed: plan.seed,
        },
        networks,
    })
}

pub fn checkpoint_name(id: usize) -> String {
    format!("models/model_{id}.ckpt")
}

/// Writes every network under `dir/models/` and records the relative paths.
pub fn save_checkpoints(dir: &Path, tz: &mut TrainedZoo) -> Result<()> {
    let models = dir.join("models");
    std::fs::create_dir_all(&models).map_err(|e| Error::io(&models, e))?;
    for (r, net) in tz.zoo.records.iter_mut().zip(&tz.networks) {
        let rel = checkpoint_name(r.id);
        let path = dir.join(&rel);
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?);
        nnkernel::write_network(&mut f, net)?;
        std::io::Write::flush(&mut f).map_err(|e| Error::io(&path, e))?;
        r.checkpoint = Some(rel.into());
    }
    Ok(())
}

pub fn load_network(dir: &Path, record: &ModelRecord) -> Result<Network> {
    let rel = record
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::validation(format!("model {} has no checkpoint", record.id)))?;
    let path = dir.join(rel);
    let mut f = std::io::BufReader::new(std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?);
    nnkernel::read_network(&mut f).map_err(|e| Error::Format {
        file: path.display().to_string(),
        line: 0,
        msg: e.to_string(),
    })
}

/// Loads every checkpoint named in `zoo`, in record order.
pub fn load_networks(dir: &Path, zoo: &ModelZoo) -> Result<Vec<Network>> {
    zoo.records.iter().map(|r| load_network(dir, r)).collect()
}

/// Serializes the full state of every network (checkpoint bytes), used to
/// compare zoos bit-for-bit.
pub fn checkpoint_bytes(net: &Network) -> Vec<u8> {
    let mut buf = Vec::new();
    nnkernel::write_network(&mut buf, net).expect("writing to memory");
    buf
}

