//! One-vs-rest linear hinge classifiers, one set per attribute head.

use nnkernel::{LayerSpec, Network, Tensor};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dream::{FingerprintMeta, Pipeline, PipelineKind, TrainingSet};
use crate::error::{Error, Result};
use crate::seed;
use crate::zoo::{head_offsets, HEAD_SIZES, TOTAL_HEAD_OUTPUTS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub lr: f64,
    /// L2 weight on the (non-bias) weights.
    pub l2: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lr: 0.05,
            l2: 1e-4,
            epochs: 60,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite() && self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config("SVM lr must be positive and l2 non-negative".into()));
        }
        Ok(())
    }
}

/// `max(0, 1 - y * score)` for `y` in {-1, +1}.
pub fn hinge_loss(y: f64, score: f64) -> f64 {
    (1.0 - y * score).max(0.0)
}

/// Fits `classes` one-vs-rest hinge models by seeded per-sample
/// subgradient descent. Returns weights `[d, classes]` and biases.
pub fn fit_one_vs_rest(x: &Tensor, labels: &[usize], classes: usize, cfg: &SvmConfig, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = labels.len();
    if n == 0 || x.rows() != n {
        return Err(Error::validation("SVM needs one label per training row"));
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(Error::validation(format!("all training labels equal {first}; one-vs-rest needs two classes")));
    }
    let d = x.row_len();
    let mut w = vec![0.0; d * classes];
    let mut b = vec![0.0; classes];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::rng(seed);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let xi = x.row(i);
            for k in 0..classes {
                let y = if labels[i] == k { 1.0 } else { -1.0 };
                let score = b[k] + (0..d).map(|j| xi[j] * w[j * classes + k]).sum::<f64>();
                let active = hinge_loss(y, score) > 0.0;
                for j in 0..d {
                    let wk = &mut w[j * classes + k];
                    let mut g = cfg.l2 * *wk;
                    if active {
                        g -= y * xi[j];
                    }
                    *wk -= cfg.lr * g;
                }
                if active {
                    b[k] += cfg.lr * y;
                }
            }
        }
    }
    Ok((w, b))
}

/// Nine one-vs-rest hinge models on raw fingerprints, packed into a single
/// `[C*N, 24]` linear head so prediction is a per-head argmax of margins.
pub fn train_linear_svm(data: &TrainingSet, meta: FingerprintMeta, cfg: &SvmConfig, seed_base: u64) -> Result<Pipeline> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::validation("empty training set"));
    }
    let d = data.features.row_len();
    let mut weight = vec![0.0; d * TOTAL_HEAD_OUTPUTS];
    let mut bias = vec![0.0; TOTAL_HEAD_OUTPUTS];
    for (a, (&off, &size)) in head_offsets().iter().zip(&HEAD_SIZES).enumerate() {
        let labels: Vec<usize> = data.labels.iter().map(|l| l[a]).collect();
        let (w, b) = fit_one_vs_rest(&data.features, &labels, size, cfg, seed::derive_labeled(seed_base, "svm", a as u64))
            .map_err(|e| Error::validation(format!("attribute head {a}: {e}")))?;
        for j in 0..d {
            weight[j * TOTAL_HEAD_OUTPUTS + off..j * TOTAL_HEAD_OUTPUTS + off + size]
                .copy_from_slice(&w[j * size..(j + 1) * size]);
        }
        bias[off..off + size].copy_from_slice(&b);
    }
    let specs = [LayerSpec::Dense { inputs: d, outputs: TOTAL_HEAD_OUTPUTS }];
    let head = Network::from_state(
        &specs,
        vec![Tensor::new(vec![d, TOTAL_HEAD_OUTPUTS], weight)?, Tensor::row_vector(bias).reshape(vec![TOTAL_HEAD_OUTPUTS])?],
    )?;
    Ok(Pipeline {
        kind: PipelineKind::Svm,
        meta,
        lambda: 0.0,
        generator: None,
        discriminators: Vec::new(),
        trunk: None,
        head,
    })
}
