//! Synthetic multi-domain image sets.
//!
//! All domains share one set of class prototypes (random stroke figures),
//! so a label means the same thing everywhere; each domain renders them in
//! its own style, which shifts the pixel statistics.

use std::io::{Read, Write};
use std::path::Path;

use nnkernel::Tensor;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Per-sample end-point jitter of every stroke, in pixels.
const JITTER_STD: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainStyle {
    /// Thin strokes on a dark background with light noise.
    Clean,
    /// Inverted polarity with heavy additive noise.
    InvertedNoise,
    /// Strokes thickened by a 3x3 dilation.
    Dilated,
    /// Clean strokes with heavy additive noise.
    Noisy,
}

impl DomainStyle {
    fn noise_std(self) -> f64 {
        match self {
            DomainStyle::Clean | DomainStyle::Dilated => 0.1,
            DomainStyle::InvertedNoise | DomainStyle::Noisy => 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub id: usize,
    pub name: String,
    pub style: DomainStyle,
    pub classes: usize,
    pub side: usize,
    pub samples_per_class: usize,
    /// Fraction of each domain held out for white-box validation.
    pub val_fraction: f64,
}

/// Labeled images of one domain. The first `n_train` rows are the training
/// part, the rest validation.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainData {
    pub domain: usize,
    pub classes: usize,
    pub side: usize,
    /// `[n, side, side, 1]`, values in `[0, 1]`.
    pub images: Tensor,
    pub labels: Vec<usize>,
    pub n_train: usize,
}

impl DomainData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn train_indices(&self) -> std::ops::Range<usize> {
        0..self.n_train
    }

    pub fn val_indices(&self) -> std::ops::Range<usize> {
        self.n_train..self.len()
    }

    pub fn pixel_mean(&self) -> f64 {
        self.images.data().iter().sum::<f64>() / self.images.len() as f64
    }

    pub fn pixel_var(&self) -> f64 {
        let m = self.pixel_mean();
        self.images.data().iter().map(|v| (v - m).powi(2)).sum::<f64>() / self.images.len() as f64
    }
}

type Bitmap = Vec<f64>;

/// A class prototype: three strokes given by their end points.
pub type Prototype = Vec<[(f64, f64); 2]>;

fn draw_segment(img: &mut Bitmap, side: usize, a: (f64, f64), b: (f64, f64)) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()) * 2.0).ceil() as usize + 1;
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let x = (a.0 + t * (b.0 - a.0)).round();
        let y = (a.1 + t * (b.1 - a.1)).round();
        if x >= 0.0 && y >= 0.0 && (x as usize) < side && (y as usize) < side {
            img[y as usize * side + x as usize] = 1.0;
        }
    }
}

/// One stroke figure per class, shared by every domain.
pub fn class_prototypes(seed: u64, classes: usize, side: usize) -> Vec<Prototype> {
    let mut rng = seed::rng(seed::derive_labeled(seed, "prototypes", 0));
    let hi = (side - 2) as f64;
    (0..classes)
        .map(|_| {
            (0..3)
                .map(|_| {
                    [
                        (rng.random_range(1.0..hi), rng.random_range(1.0..hi)),
                        (rng.random_range(1.0..hi), rng.random_range(1.0..hi)),
                    ]
                })
                .collect()
        })
        .collect()
}

fn dilated(img: &Bitmap, side: usize) -> Bitmap {
    let mut out = vec![0.0; side * side];
    for y in 0..side {
        for x in 0..side {
            let mut m: f64 = 0.0;
            for yy in y.saturating_sub(1)..(y + 2).min(side) {
                for xx in x.saturating_sub(1)..(x + 2).min(side) {
                    m = m.max(img[yy * side + xx]);
                }
            }
            out[y * side + x] = m;
        }
    }
    out
}

fn render<R: Rng>(proto: &Prototype, spec: &DomainSpec, rng: &mut R) -> Bitmap {
    let side = spec.side;
    let jitter = Normal::new(0.0, JITTER_STD).expect("finite std");
    let dx = rng.random_range(-1.0..=1.0);
    let dy = rng.random_range(-1.0..=1.0);
    let mut strokes = vec![0.0; side * side];
    for seg in proto {
        let [a, b] = seg.map(|(x, y)| (x + dx + jitter.sample(rng), y + dy + jitter.sample(rng)));
        draw_segment(&mut strokes, side, a, b);
    }
    if spec.style == DomainStyle::Dilated {
        strokes = dilated(&strokes, side);
    }
    let intensity = rng.random_range(0.6..1.0);
    let noise = Normal::new(0.0, spec.style.noise_std()).expect("finite std");
    strokes
        .iter()
        .map(|&s| {
            let ink = intensity * s;
            let v = match spec.style {
                DomainStyle::InvertedNoise => 1.0 - ink,
                _ => ink,
            };
            (v + noise.sample(rng)).clamp(0.0, 1.0)
        })
        .collect()
}

/// Generates every domain from one seed. Deterministic.
pub fn gen_synthetic_domains(seed: u64, specs: &[DomainSpec]) -> Result<Vec<DomainData>> {
    if specs.len() < 2 {
        return Err(Error::validation("at least two domains are required"));
    }
    let classes = specs[0].classes;
    let side = specs[0].side;
    if specs.iter().any(|s| s.classes != classes || s.side != side) {
        return Err(Error::validation("all domains must share class count and image side"));
    }
    if classes < 2 || side < 4 {
        return Err(Error::validation("need at least 2 classes and 4x4 images"));
    }
    let protos = class_prototypes(seed, classes, side);
    specs
        .iter()
        .map(|spec| {
            if !(0.0..1.0).contains(&spec.val_fraction) || spec.samples_per_class == 0 {
                return Err(Error::validation(format!("domain {}: bad sample counts", spec.id)));
            }
            let mut rng = seed::rng(seed::derive_labeled(seed, "domain", spec.id as u64));
            let mut samples: Vec<(Bitmap, usize)> = Vec::with_capacity(classes * spec.samples_per_class);
            for (label, proto) in protos.iter().enumerate() {
                for _ in 0..spec.samples_per_class {
                    samples.push((render(proto, spec, &mut rng), label));
                }
            }
            samples.shuffle(&mut rng);
            let n = samples.len();
            let n_train = n - (n as f64 * spec.val_fraction).round() as usize;
            let labels = samples.iter().map(|s| s.1).collect();
            let pixels = samples.into_iter().flat_map(|s| s.0).collect();
            Ok(DomainData {
                domain: spec.id,
                classes,
                side,
                images: Tensor::new(vec![n, side, side, 1], pixels)?,
                labels,
                n_train,
            })
        })
        .collect()
}

const DATA_MAGIC: &[u8; 8] = b"DRMDATA1";

/// Binary little-endian dataset file: magic, then u32 domain, classes,
/// side, n, n_train, then n u32 labels, then n*side*side f64 pixels.
pub fn write_domain(path: &Path, d: &DomainData) -> Result<()> {
    let mut buf = Vec::with_capacity(32 + d.len() * 4 + d.images.len() * 8);
    buf.extend_from_slice(DATA_MAGIC);
    for v in [d.domain, d.classes, d.side, d.len(), d.n_train] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for &l in &d.labels {
        buf.extend_from_slice(&(l as u32).to_le_bytes());
    }
    for v in d.images.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_domain(path: &Path) -> Result<DomainData> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Format {
        file: path.display().to_string(),
        line: 0,
        msg: msg.to_string(),
    };
    if bytes.len() < 28 || &bytes[..8] != DATA_MAGIC {
        return Err(bad("not a dataset file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (domain, classes, side, n, n_train) = (u32_at(8), u32_at(12), u32_at(16), u32_at(20), u32_at(24));
    let need = 28 + n * 4 + n * side * side * 8;
    if bytes.len() != need || n_train > n {
        return Err(bad("truncated or inconsistent dataset file"));
    }
    let labels: Vec<usize> = (0..n).map(|i| u32_at(28 + 4 * i)).collect();
    if labels.iter().any(|&l| l >= classes) {
        return Err(bad("label out of range"));
    }
    let start = 28 + n * 4;
    let pixels = bytes[start..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(DomainData {
        domain,
        classes,
        side,
        images: Tensor::new(vec![n, side, side, 1], pixels)?,
        labels,
        n_train,
    })
}
