//! Reference attribute predictors: a plain classifier on raw fingerprints,
//! a linear one-vs-rest hinge model, and an MMD-regularized classifier.

mod mmd;
mod svm;

use serde::{Deserialize, Serialize};

use crate::dream::{train_with, DreamConfig, FingerprintMeta, PipelineKind, Trained, TrainOptions, TrainingSet};
use crate::error::{Error, Result};

pub use mmd::{median_bandwidth, mmd2, mmd_penalty};
pub use svm::{hinge_loss, train_linear_svm, SvmConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Learning rate of the raw-fingerprint classifiers.
    pub lr: f64,
    pub epochs: usize,
    /// MMD weight used when not tuned.
    pub mmd_gamma: f64,
    pub mmd_gamma_grid: Vec<f64>,
    pub tune_gamma: bool,
    /// Fixed RBF bandwidth; absent means the median heuristic.
    pub mmd_sigma: Option<f64>,
    pub svm: SvmConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        let d = DreamConfig::default();
        Self {
            lr: d.beta,
            epochs: d.epochs,
            mmd_gamma: 1.0,
            mmd_gamma_grid: vec![0.01, 0.1, 1.0, 10.0],
            tune_gamma: false,
            mmd_sigma: None,
            svm: SvmConfig::default(),
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        let gammas_ok = self.mmd_gamma_grid.iter().chain([&self.mmd_gamma]).all(|g| g.is_finite() && *g >= 0.0);
        if !gammas_ok {
            return Err(Error::Config("MMD weights must be finite and >= 0".into()));
        }
        if matches!(self.mmd_sigma, Some(s) if !(s > 0.0 && s.is_finite())) {
            return Err(Error::Config("MMD bandwidth must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::Config("baseline learning rate must be finite and >= 0".into()));
        }
        self.svm.validate()
    }

    /// Classifier settings: the reverse classifier of `dream` with the
    /// baseline's learning rate and epoch budget and no adversarial part.
    pub fn classifier_config(&self, dream: &DreamConfig) -> DreamConfig {
        DreamConfig {
            beta: self.lr,
            epochs: self.epochs,
            adversarial: false,
            ..dream.clone()
        }
    }
}

/// Reverse classifier trained directly on raw fingerprints with the
/// cross-entropy loss only; domain tags only balance the batches.
pub fn train_kennen(data: &TrainingSet, meta: FingerprintMeta, cfg: &DreamConfig, seed: u64) -> Result<Trained> {
    let cfg = DreamConfig {
        adversarial: false,
        ..cfg.clone()
    };
    let opts = TrainOptions {
        kind: PipelineKind::Kennen,
        lambda: 0.0,
        mmd_gamma: 0.0,
        mmd_sigma: None,
    };
    train_with(data, meta, &cfg, opts, seed)
}

/// [`train_kennen`] plus `gamma` times the mean pairwise MMD between the
/// domains' trunk features.
pub fn train_mmd(
    data: &TrainingSet,
    meta: FingerprintMeta,
    cfg: &DreamConfig,
    gamma: f64,
    sigma: Option<f64>,
    seed: u64,
) -> Result<Trained> {
    if data.m < 2 {
        return Err(Error::validation("the MMD baseline needs at least two source domains"));
    }
    let cfg = DreamConfig {
        adversarial: false,
        ..cfg.clone()
    };
    let opts = TrainOptions {
        kind: PipelineKind::Mmd,
        lambda: 0.0,
        mmd_gamma: gamma,
        mmd_sigma: sigma,
    };
    train_with(data, meta, &cfg, opts, seed)
}
