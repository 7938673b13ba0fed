//! Domain-agnostic reverse model: a generator G embeds fingerprints, one
//! discriminator per source domain tries to tell its own domain's
//! embeddings from the rest, and a reverse classifier predicts the nine
//! attributes from the embeddings.

mod bundle;
mod loss;
mod train;

use nnkernel::{Activation, Init, LayerSpec, Network, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::FingerprintSet;
use crate::zoo::{AttributeVector, TOTAL_HEAD_OUTPUTS};

pub use bundle::{decode_pipeline, encode_pipeline, read_pipeline, write_pipeline, PIPELINE_MAGIC};
pub use loss::{
    classifier_loss, discriminator_loss, generator_adversarial_loss, head_predictions, partition_true_false,
    AttrLabels, PROB_CLAMP,
};
pub use train::{select_lambda, train_dream, train_with, EpochMetrics, Trained, TrainOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DreamConfig {
    /// Learning rate of the generator and discriminators.
    pub alpha: f64,
    /// Learning rate of the reverse classifier.
    pub beta: f64,
    /// Weight of the classification term in the generator's objective.
    pub lambda: f64,
    pub lambda_grid: Vec<f64>,
    /// Pick lambda from `lambda_grid` on the validation split.
    pub tune_lambda: bool,
    /// Fingerprints sampled per source domain in every iteration.
    pub batch_size: usize,
    /// Training iterations.
    pub epochs: usize,
    pub init_std: f64,
    pub generator_hidden: usize,
    pub embedding_dim: usize,
    pub generator_final_relu: bool,
    pub discriminator_widths: Vec<usize>,
    pub trunk_width: usize,
    /// Generator maximizes `log D` instead of minimizing `log(1 - D)`.
    pub non_saturating: bool,
    /// With `false` there is no generator or discriminator and the reverse
    /// classifier reads raw fingerprints.
    pub adversarial: bool,
}

impl Default for DreamConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta: 1e-3,
            lambda: 1.0,
            lambda_grid: vec![0.001, 0.01, 0.1, 1.0, 10.0],
            tune_lambda: false,
            batch_size: 32,
            epochs: 1500,
            init_std: 0.02,
            generator_hidden: 500,
            embedding_dim: 128,
            generator_final_relu: false,
            discriminator_widths: vec![512, 256],
            trunk_width: 256,
            non_saturating: false,
            adversarial: true,
        }
    }
}

impl DreamConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.alpha.is_finite() && self.alpha >= 0.0 && self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("learning rates must be finite and >= 0 (alpha {}, beta {})", self.alpha, self.beta));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) || self.lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return bad("lambda values must be finite and >= 0".into());
        }
        if self.batch_size < 2 {
            return bad(format!("batch size {} must be at least 2", self.batch_size));
        }
        if self.init_std <= 0.0 || !self.init_std.is_finite() {
            return bad("init_std must be positive".into());
        }
        if [self.generator_hidden, self.embedding_dim, self.trunk_width].contains(&0)
            || self.discriminator_widths.contains(&0)
        {
            return bad("layer widths must be positive".into());
        }
        Ok(())
    }

    fn init(&self) -> Init {
        Init::Normal { std: self.init_std }
    }

    pub fn generator_specs(&self, input: usize) -> Vec<LayerSpec> {
        let mut s = vec![
            LayerSpec::Dense { inputs: input, outputs: self.generator_hidden },
            LayerSpec::Activation(Activation::Relu),
            LayerSpec::Dense { inputs: self.generator_hidden, outputs: self.embedding_dim },
        ];
        if self.generator_final_relu {
            s.push(LayerSpec::Activation(Activation::Relu));
        }
        s
    }

    pub fn discriminator_specs(&self) -> Vec<LayerSpec> {
        let mut s = Vec::new();
        let mut width = self.embedding_dim;
        for &w in &self.discriminator_widths {
            s.push(LayerSpec::Dense { inputs: width, outputs: w });
            s.push(LayerSpec::Activation(Activation::Relu));
            width = w;
        }
        s.push(LayerSpec::Dense { inputs: width, outputs: 1 });
        s.push(LayerSpec::Activation(Activation::Sigmoid));
        s
    }

    pub fn trunk_specs(&self, input: usize) -> Vec<LayerSpec> {
        vec![
            LayerSpec::Dense { inputs: input, outputs: self.trunk_width },
            LayerSpec::Activation(Activation::Relu),
        ]
    }

    pub fn head_specs(&self) -> Vec<LayerSpec> {
        vec![LayerSpec::Dense { inputs: self.trunk_width, outputs: TOTAL_HEAD_OUTPUTS }]
    }
}

/// Labeled fingerprints with domain tags renumbered to `0..m`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub features: Tensor,
    pub labels: Vec<AttrLabels>,
    pub domains: Vec<usize>,
    pub m: usize,
    pub ids: Vec<usize>,
}

impl TrainingSet {
    /// Rows of `set` with the given model ids; `domain_order[k]` is the
    /// original domain that becomes local domain `k`.
    pub fn from_fingerprints(set: &FingerprintSet, ids: &[usize], domain_order: &[usize]) -> Result<Self> {
        let mut labels = Vec::with_capacity(ids.len());
        let mut domains = Vec::with_capacity(ids.len());
        for &id in ids {
            let row = set
                .row(id)
                .ok_or_else(|| Error::validation(format!("no fingerprint for model {id}")))?;
            let attrs = row
                .attrs
                .ok_or_else(|| Error::validation(format!("model {id} has no attribute labels")))?;
            let d = row
                .domain
                .and_then(|d| domain_order.iter().position(|&x| x == d))
                .ok_or_else(|| Error::validation(format!("model {id} is not from a listed domain")))?;
            labels.push(attrs.indices());
            domains.push(d);
        }
        Ok(Self {
            features: set.matrix(ids)?,
            labels,
            domains,
            m: domain_order.len(),
            ids: ids.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn rows_of(&self, domain: usize) -> Vec<usize> {
        (0..self.len()).filter(|&r| self.domains[r] == domain).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineKind {
    Dream,
    Kennen,
    Mmd,
    Svm,
}

impl PipelineKind {
    pub const ALL: [PipelineKind; 4] = [PipelineKind::Dream, PipelineKind::Kennen, PipelineKind::Mmd, PipelineKind::Svm];

    pub fn name(self) -> &'static str {
        match self {
            PipelineKind::Dream => "dream",
            PipelineKind::Kennen => "kennen",
            PipelineKind::Mmd => "mmd",
            PipelineKind::Svm => "svm",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }
}

impl std::fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PipelineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown method `{s}`")))
    }
}

/// What a trained pipeline expects of its input fingerprints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FingerprintMeta {
    pub classes: usize,
    pub queries: usize,
    pub domains: usize,
    pub grid_hash: u64,
}

impl FingerprintMeta {
    pub fn of(set: &FingerprintSet, grid_hash: u64) -> Self {
        Self {
            classes: set.classes,
            queries: set.queries,
            domains: set.domains,
            grid_hash,
        }
    }

    pub fn width(&self) -> usize {
        self.classes * self.queries
    }
}

/// A trained attribute predictor: optional generator, its discriminators,
/// optional trunk and the 24-wide head layer.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub kind: PipelineKind,
    pub meta: FingerprintMeta,
    pub lambda: f64,
    pub generator: Option<Network>,
    pub discriminators: Vec<Network>,
    pub trunk: Option<Network>,
    pub head: Network,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub labels: AttrLabels,
    pub probabilities: Vec<Vec<f64>>,
}

impl Prediction {
    pub fn attributes(&self) -> AttributeVector {
        AttributeVector::from_indices(self.labels).expect("head argmax is in range")
    }
}

impl Pipeline {
    /// Refuses fingerprints produced for a different (C, N, m, grid).
    pub fn check_compatible(&self, set: &FingerprintSet, grid_hash: u64) -> Result<()> {
        let other = FingerprintMeta::of(set, grid_hash);
        if other != self.meta {
            return Err(Error::incompatible(format!(
                "pipeline trained for C={} N={} m={} grid={:016x}, fingerprints have C={} N={} m={} grid={:016x}",
                self.meta.classes,
                self.meta.queries,
                self.meta.domains,
                self.meta.grid_hash,
                other.classes,
                other.queries,
                other.domains,
                other.grid_hash
            )));
        }
        Ok(())
    }

    /// Generator embeddings `z`, or the input itself without a generator.
    pub fn embed(&self, x: &Tensor) -> Result<Tensor> {
        self.check_width(x)?;
        match &self.generator {
            Some(g) => Ok(g.infer(x)?),
            None => Ok(x.clone()),
        }
    }

    fn check_width(&self, x: &Tensor) -> Result<()> {
        if x.shape().len() != 2 || x.shape()[1] != self.meta.width() {
            return Err(Error::incompatible(format!(
                "fingerprint length {:?} does not match the pipeline's C*N = {}",
                &x.shape()[1..],
                self.meta.width()
            )));
        }
        Ok(())
    }

    /// Head logits `[n, 24]`.
    pub fn logits(&self, x: &Tensor) -> Result<Tensor> {
        let z = self.embed(x)?;
        let h = match &self.trunk {
            Some(t) => t.infer(&z)?,
            None => z,
        };
        Ok(self.head.infer(&h)?)
    }

    pub fn predict(&self, x: &Tensor) -> Result<Vec<Prediction>> {
        let logits = self.logits(x)?;
        Ok((0..logits.rows())
            .map(|r| {
                let (labels, probabilities) = head_predictions(logits.row(r));
                Prediction { labels, probabilities }
            })
            .collect())
    }

    /// Predicts the nine attributes of one black-box fingerprint.
    pub fn infer_attributes(&self, fingerprint: &[f64]) -> Result<Prediction> {
        let x = Tensor::row_vector(fingerprint.to_vec());
        Ok(self.predict(&x)?.remove(0))
    }
}

