//! The alternating training loop.
//!
//! One epoch is one iteration of the game: sample `b` fingerprints per
//! source domain; update every discriminator on its True/False split of
//! the (detached) embeddings; then update the reverse classifier on the
//! pooled embeddings and the generator on the adversarial term plus
//! `lambda` times the classification loss.

use log::{info, warn};
use nnkernel::{Mode, Network, Optimizer, OptimizerKind, Tensor};
use rand::seq::index::sample;
use rand::Rng;

use super::loss::{classifier_loss, discriminator_loss, generator_adversarial_loss, partition_true_false};
use super::{DreamConfig, FingerprintMeta, Pipeline, PipelineKind, TrainingSet};
use crate::baselines::mmd_penalty;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpochMetrics {
    /// Mean per-sample loss of each discriminator before its update.
    pub discriminator: Vec<f64>,
    /// Mean per-sample adversarial term of the generator.
    pub adversarial: f64,
    /// Mean per-sample sum of the nine head cross-entropies.
    pub classifier: f64,
    pub mmd: f64,
}

pub struct Trained {
    pub pipeline: Pipeline,
    pub history: Vec<EpochMetrics>,
}

/// Extras beyond the plain game.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainOptions {
    pub kind: PipelineKind,
    pub lambda: f64,
    /// Weight of the MMD penalty on trunk features; 0 disables it.
    pub mmd_gamma: f64,
    /// Fixed RBF bandwidth; `None` uses the median heuristic per batch.
    pub mmd_sigma: Option<f64>,
}

fn adam(lr: f64) -> Result<Optimizer> {
    Ok(Optimizer::new(OptimizerKind::Adam, lr)?)
}

fn net(specs: &[nnkernel::LayerSpec], cfg: &DreamConfig, seed: u64, label: &str, item: u64) -> Result<Network> {
    let mut rng = seed::rng(seed::derive_labeled(seed, label, item));
    Ok(Network::new(specs, cfg.init(), &mut rng)?)
}

/// Row indices of one batch: `b` per domain, domain by domain. Sampled
/// without replacement when the domain has enough rows.
fn sample_batch(data: &TrainingSet, per_domain: &[Vec<usize>], b: usize, rng: &mut seed::Rng) -> Vec<usize> {
    let mut out = Vec::with_capacity(b * data.m);
    for rows in per_domain {
        if rows.len() >= b {
            out.extend(sample(rng, rows.len(), b).into_iter().map(|k| rows[k]));
        } else {
            out.extend((0..b).map(|_| rows[rng.random_range(0..rows.len())]));
        }
    }
    out
}

/// Trains a pipeline. With `cfg.adversarial` false this is a plain
/// classifier on raw fingerprints (optionally MMD-regularized).
pub fn train_with(data: &TrainingSet, meta: FingerprintMeta, cfg: &DreamConfig, opts: TrainOptions, seed: u64) -> Result<Trained> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::validation("empty training set"));
    }
    if data.features.shape()[1] != meta.width() {
        return Err(Error::incompatible(format!(
            "training fingerprints have width {}, expected C*N = {}",
            data.features.shape()[1],
            meta.width()
        )));
    }
    let per_domain: Vec<Vec<usize>> = (0..data.m).map(|d| data.rows_of(d)).collect();
    if let Some(d) = per_domain.iter().position(Vec::is_empty) {
        return Err(Error::validation(format!("source domain {d} has no training fingerprints")));
    }
    for (d, rows) in per_domain.iter().enumerate() {
        if rows.len() < cfg.batch_size {
            warn!(
                "domain {d}: {} training fingerprints < batch size {}; sampling with replacement",
                rows.len(),
                cfg.batch_size
            );
        }
    }
    if cfg.adversarial && data.m < 2 {
        return Err(Error::validation("adversarial training needs at least two source domains"));
    }
    if opts.mmd_gamma > 0.0 && data.m < 2 {
        return Err(Error::validation("the MMD penalty needs at least two source domains"));
    }
    let width = meta.width();
    let (mut generator, mut discriminators) = if cfg.adversarial {
        let g = net(&cfg.generator_specs(width), cfg, seed, "generator", 0)?;
        let d = (0..data.m)
            .map(|i| net(&cfg.discriminator_specs(), cfg, seed, "discriminator", i as u64))
            .collect::<Result<Vec<_>>>()?;
        (Some(g), d)
    } else {
        (None, Vec::new())
    };
    let trunk_in = if cfg.adversarial { cfg.embedding_dim } else { width };
    let mut trunk = net(&cfg.trunk_specs(trunk_in), cfg, seed, "trunk", 0)?;
    let mut head = net(&cfg.head_specs(), cfg, seed, "head", 0)?;
    let mut opt_g = adam(cfg.alpha)?;
    let mut opt_d = (0..discriminators.len()).map(|_| adam(cfg.alpha)).collect::<Result<Vec<_>>>()?;
    let mut opt_trunk = adam(cfg.beta)?;
    let mut opt_head = adam(cfg.beta)?;
    let mut rng = seed::rng(seed::derive_labeled(seed, "batches", 0));
    let mut history = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        let rows = sample_batch(data, &per_domain, cfg.batch_size, &mut rng);
        let x = data.features.select_rows(&rows);
        let tags: Vec<usize> = rows.iter().map(|&r| data.domains[r]).collect();
        let labels: Vec<_> = rows.iter().map(|&r| data.labels[r]).collect();
        let n = rows.len() as f64;
        let mut m = EpochMetrics::default();

        if let Some(g) = generator.as_mut() {
            let z = g.infer(&x)?;
            for (i, (d, opt)) in discriminators.iter_mut().zip(opt_d.iter_mut()).enumerate() {
                let (t, f) = partition_true_false(&tags, data.m, i)?;
                let order: Vec<usize> = t.iter().chain(&f).copied().collect();
                let p = d.forward(&z.select_rows(&order), Mode::Train, &mut rng)?;
                let (loss, dp) = discriminator_loss(p.data(), t.len());
                d.zero_grad();
                d.backward_params(&Tensor::new(vec![order.len(), 1], dp)?)?;
                opt.step_network(d)?;
                m.discriminator.push(loss / n);
            }
        }

        let z = match generator.as_mut() {
            Some(g) => g.forward(&x, Mode::Train, &mut rng)?,
            None => x,
        };
        let h = trunk.forward(&z, Mode::Train, &mut rng)?;
        let logits = head.forward(&h, Mode::Train, &mut rng)?;
        let (ce, dlogits) = classifier_loss(&logits, &labels)?;
        m.classifier = ce / n;
        head.zero_grad();
        let mut dh = head.backward(&dlogits)?;
        if opts.mmd_gamma > 0.0 {
            let groups: Vec<Vec<usize>> = (0..data.m)
                .map(|d| (0..tags.len()).filter(|&r| tags[r] == d).collect())
                .collect();
            let feats: Vec<Tensor> = groups.iter().map(|g| h.select_rows(g)).collect();
            let refs: Vec<&Tensor> = feats.iter().collect();
            match mmd_penalty(&refs, opts.mmd_sigma) {
                Ok((value, grads, _)) => {
                    m.mmd = value;
                    for (g, grad) in groups.iter().zip(&grads) {
                        for (k, &r) in g.iter().enumerate() {
                            for (a, b) in dh.row_mut(r).iter_mut().zip(grad.row(k)) {
                                *a += opts.mmd_gamma * b;
                            }
                        }
                    }
                }
                Err(e) => warn!("MMD penalty skipped for this batch: {e}"),
            }
        }
        trunk.zero_grad();
        let dz_ce = if generator.is_some() {
            Some(trunk.backward(&dh)?)
        } else {
            trunk.backward_params(&dh)?;
            None
        };
        opt_head.step_network(&mut head)?;
        opt_trunk.step_network(&mut trunk)?;

        if let (Some(g), Some(dz_ce)) = (generator.as_mut(), dz_ce) {
            let mut dz = Tensor::zeros(z.shape());
            let mut adv = 0.0;
            for (i, d) in discriminators.iter_mut().enumerate() {
                let (_, f) = partition_true_false(&tags, data.m, i)?;
                let p = d.forward(&z.select_rows(&f), Mode::Train, &mut rng)?;
                let (loss, dp) = generator_adversarial_loss(p.data(), cfg.non_saturating);
                adv += loss;
                d.zero_grad();
                let dzf = d.backward(&Tensor::new(vec![f.len(), 1], dp)?)?;
                for (k, &r) in f.iter().enumerate() {
                    for (a, b) in dz.row_mut(r).iter_mut().zip(dzf.row(k)) {
                        *a += b;
                    }
                }
            }
            m.adversarial = adv / n;
            for (a, b) in dz.data_mut().iter_mut().zip(dz_ce.data()) {
                *a += opts.lambda * b;
            }
            g.zero_grad();
            g.backward_params(&dz)?;
            opt_g.step_network(g)?;
        }
        history.push(m);
    }
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        info!(
            "{} trained {} epochs: classifier loss {:.4} -> {:.4}",
            opts.kind,
            cfg.epochs,
            first.classifier,
            last.classifier
        );
    }
    for d in &mut discriminators {
        d.zero_grad();
    }
    Ok(Trained {
        pipeline: Pipeline {
            kind: opts.kind,
            meta,
            lambda: opts.lambda,
            generator: generator.take(),
            discriminators,
            trunk: Some(trunk),
            head,
        },
        history,
    })
}

/// Full adversarial training at a fixed `lambda`.
pub fn train_dream(data: &TrainingSet, meta: FingerprintMeta, cfg: &DreamConfig, lambda: f64, seed: u64) -> Result<Trained> {
    let opts = TrainOptions {
        kind: PipelineKind::Dream,
        lambda,
        mmd_gamma: 0.0,
        mmd_sigma: None,
    };
    train_with(data, meta, cfg, opts, seed)
}

/// Trains one pipeline per distinct grid value with the same seed and
/// returns the value with the best mean per-attribute accuracy on `val`
/// (ties go to the smaller value), with every score.
pub fn select_lambda(
    train: &TrainingSet,
    val: &TrainingSet,
    meta: FingerprintMeta,
    cfg: &DreamConfig,
    grid: &[f64],
    seed: u64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if val.is_empty() {
        return Err(Error::validation("lambda selection needs a non-empty validation split"));
    }
    let mut values = grid.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    match values.as_slice() {
        [] => return Err(Error::validation("empty lambda grid")),
        [only] => return Ok((*only, Vec::new())),
        _ => {}
    }
    let scores = crate::par::map(&values, |&l| -> Result<f64> {
        let t = train_dream(train, meta, cfg, l, seed)?;
        let preds = t.pipeline.predict(&val.features)?;
        let pred: Vec<_> = preds.iter().map(|p| p.labels).collect();
        Ok(crate::harness::per_attribute_accuracy(&pred, &val.labels)?.average)
    });
    let mut scored = Vec::with_capacity(values.len());
    for (l, s) in values.iter().zip(scores) {
        scored.push((*l, s?));
    }
    let mut best = scored[0];
    for &(l, s) in &scored[1..] {
        if s > best.1 {
            best = (l, s);
        }
    }
    Ok((best.0, scored))
}
