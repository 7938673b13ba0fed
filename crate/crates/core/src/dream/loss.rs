//! Losses of the adversarial embedding game and the attribute heads.
//!
//! Each function returns the summed loss and its gradient with respect to
//! its direct input (probabilities for the discriminator terms, logits for
//! the heads), so callers can chain them into a network's backward pass.

use nnkernel::{softmax_cross_entropy, Tensor};

use crate::error::{Error, Result};
use crate::zoo::{head_offsets, HEAD_SIZES, NUM_ATTRIBUTES, TOTAL_HEAD_OUTPUTS};

/// Discriminator outputs are clamped to `[EPS, 1 - EPS]` before any log.
pub const PROB_CLAMP: f64 = 1e-12;

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Splits row indices by domain: rows whose tag is `i` (True) and all other
/// rows (False). Both lists keep batch order.
pub fn partition_true_false(domains: &[usize], m: usize, i: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if m < 2 {
        return Err(Error::validation("the True/False partition needs at least two domains"));
    }
    if i >= m {
        return Err(Error::validation(format!("domain {i} out of range for m={m}")));
    }
    Ok((0..domains.len()).partition(|&r| domains[r] == i))
}

/// `-[sum_T log D(z) + sum_F log(1 - D(z))]` over a column of discriminator
/// outputs whose first `n_true` rows are the True set. Gradient is wrt the
/// (unclamped) outputs; zero where clamping is active.
pub fn discriminator_loss(probs: &[f64], n_true: usize) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let grad = probs
        .iter()
        .enumerate()
        .map(|(r, &p)| {
            let c = clamp(p);
            let inside = c == p;
            if r < n_true {
                loss -= c.ln();
                if inside { -1.0 / p } else { 0.0 }
            } else {
                loss -= (1.0 - c).ln();
                if inside { 1.0 / (1.0 - p) } else { 0.0 }
            }
        })
        .collect();
    (loss, grad)
}

/// Generator's adversarial term for one discriminator over its False rows.
///
/// Saturating (default): `sum log(1 - D(G(x)))`, minimized by the generator.
/// Non-saturating: `-sum log D(G(x))`.
pub fn generator_adversarial_loss(probs: &[f64], non_saturating: bool) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let grad = probs
        .iter()
        .map(|&p| {
            let c = clamp(p);
            let inside = c == p;
            if non_saturating {
                loss -= c.ln();
                if inside { -1.0 / p } else { 0.0 }
            } else {
                loss += (1.0 - c).ln();
                if inside { -1.0 / (1.0 - p) } else { 0.0 }
            }
        })
        .collect();
    (loss, grad)
}

/// Attribute labels of one model as value indices in canonical order.
pub type AttrLabels = [usize; NUM_ATTRIBUTES];

/// Summed cross-entropy of the nine heads over all rows of a
/// `[n, 24]` logit matrix, and its gradient wrt the logits.
pub fn classifier_loss(logits: &Tensor, labels: &[AttrLabels]) -> Result<(f64, Tensor)> {
    if logits.shape() != [labels.len(), TOTAL_HEAD_OUTPUTS] {
        return Err(Error::validation(format!(
            "head logits {:?} for {} labels",
            logits.shape(),
            labels.len()
        )));
    }
    let n = labels.len();
    let mut grad = Tensor::zeros(logits.shape());
    let mut total = 0.0;
    for (a, (&off, &size)) in head_offsets().iter().zip(&HEAD_SIZES).enumerate() {
        let mut part = Vec::with_capacity(n * size);
        for r in 0..n {
            part.extend_from_slice(&logits.row(r)[off..off + size]);
        }
        let head_labels: Vec<usize> = labels.iter().map(|l| l[a]).collect();
        if let Some(bad) = head_labels.iter().find(|&&l| l >= size) {
            return Err(Error::validation(format!("label {bad} outside the {size} values of head {a}")));
        }
        let (loss, g) = softmax_cross_entropy(&Tensor::new(vec![n, size], part)?, &head_labels)?;
        total += loss;
        for r in 0..n {
            grad.row_mut(r)[off..off + size].copy_from_slice(g.row(r));
        }
    }
    Ok((total, grad))
}

/// Per-head softmax probabilities and argmax predictions of one logit row.
pub fn head_predictions(row: &[f64]) -> (AttrLabels, Vec<Vec<f64>>) {
    let mut pred = [0; NUM_ATTRIBUTES];
    let mut probs = Vec::with_capacity(NUM_ATTRIBUTES);
    for (a, (&off, &size)) in head_offsets().iter().zip(&HEAD_SIZES).enumerate() {
        let p = nnkernel::softmax_rows(&row[off..off + size]);
        pred[a] = crate::zoo::argmax(&p);
        probs.push(p);
    }
    (pred, probs)
}
