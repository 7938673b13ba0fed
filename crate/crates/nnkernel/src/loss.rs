use crate::error::{NnError, Result};
use crate::tensor::Tensor;

/// Probabilities below this are clamped before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Max-subtracted softmax of one slice.
pub fn softmax_rows(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

pub fn log_softmax_rows(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    logits.iter().map(|v| v - lse).collect()
}

/// Softmax along `axis`.
pub fn softmax(logits: &Tensor, axis: usize) -> Result<Tensor> {
    let shape = logits.shape();
    if axis >= shape.len() {
        return Err(NnError::Shape(format!("axis {axis} out of range for {shape:?}")));
    }
    if !logits.is_finite() {
        return Err(NnError::NonFinite("softmax input".into()));
    }
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = logits.clone();
    let src = logits.data();
    let dst = out.data_mut();
    let mut buf = vec![0.0; n];
    for o in 0..outer {
        for i in 0..inner {
            let at = |j: usize| (o * n + j) * inner + i;
            for (j, b) in buf.iter_mut().enumerate() {
                *b = src[at(j)];
            }
            for (j, p) in softmax_rows(&buf).into_iter().enumerate() {
                dst[at(j)] = p;
            }
        }
    }
    Ok(out)
}

/// `-y^T log p` with `p` floored at [`PROB_FLOOR`]; also returns `dL/dp`.
pub fn cross_entropy(probs: &[f64], onehot: &[f64]) -> Result<(f64, Vec<f64>)> {
    if probs.len() != onehot.len() {
        return Err(NnError::Shape(format!(
            "cross entropy over {} probabilities with {} labels",
            probs.len(),
            onehot.len()
        )));
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; probs.len()];
    for ((p, y), g) in probs.iter().zip(onehot).zip(grad.iter_mut()) {
        if *y != 0.0 {
            let pc = p.max(PROB_FLOOR);
            loss -= y * pc.ln();
            if *p >= PROB_FLOOR {
                *g = -y / pc;
            }
        }
    }
    Ok((loss, grad))
}

/// Summed softmax cross-entropy over the rows of `logits: [batch, k]`.
/// Returns the loss and its gradient `p - y` with respect to the logits.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    if logits.shape().len() != 2 || logits.rows() != labels.len() {
        return Err(NnError::Shape(format!(
            "logits {:?} with {} labels",
            logits.shape(),
            labels.len()
        )));
    }
    let k = logits.shape()[1];
    let mut grad = Tensor::zeros(logits.shape());
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(NnError::Shape(format!("label {label} out of range for {k} classes")));
        }
        let logp = log_softmax_rows(logits.row(r));
        loss -= logp[label].max(PROB_FLOOR.ln());
        let g = grad.row_mut(r);
        for (gi, lp) in g.iter_mut().zip(&logp) {
            *gi = lp.exp();
        }
        g[label] -= 1.0;
    }
    Ok((loss, grad))
}
