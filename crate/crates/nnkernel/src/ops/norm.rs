use crate::error::{NnError, Result};
use crate::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

pub struct BatchStats {
    pub mean: Vec<f64>,
    /// Biased (population) variance of the batch.
    pub var: Vec<f64>,
    pub count: usize,
}

fn channels_of(x: &Tensor, channels: usize) -> Result<usize> {
    let last = *x.shape().last().unwrap_or(&0);
    if last != channels || x.shape().len() < 2 {
        return Err(NnError::Shape(format!(
            "batchnorm over {channels} channels got {:?}",
            x.shape()
        )));
    }
    Ok(x.len() / channels)
}

pub fn batch_stats(x: &Tensor, channels: usize) -> Result<BatchStats> {
    let count = channels_of(x, channels)?;
    if x.rows() < 2 {
        return Err(NnError::BatchTooSmall);
    }
    let mut mean = vec![0.0; channels];
    for chunk in x.data().chunks_exact(channels) {
        for (m, v) in mean.iter_mut().zip(chunk) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    let mut var = vec![0.0; channels];
    for chunk in x.data().chunks_exact(channels) {
        for ((s, v), m) in var.iter_mut().zip(chunk).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= count as f64);
    Ok(BatchStats { mean, var, count })
}

/// Normalizes with the given per-channel statistics; returns `(y, x_hat, inv_std)`.
pub fn normalize(
    x: &Tensor,
    mean: &[f64],
    var: &[f64],
    gamma: &[f64],
    beta: &[f64],
) -> (Tensor, Tensor, Vec<f64>) {
    let channels = mean.len();
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = x.clone();
    let mut y = x.clone();
    for (hc, yc) in xhat
        .data_mut()
        .chunks_exact_mut(channels)
        .zip(y.data_mut().chunks_exact_mut(channels))
    {
        for c in 0..channels {
            let h = (hc[c] - mean[c]) * inv_std[c];
            hc[c] = h;
            yc[c] = gamma[c] * h + beta[c];
        }
    }
    (y, xhat, inv_std)
}

/// Accumulates `dgamma`/`dbeta`; returns `dx` for train-mode normalization.
pub fn backward(
    xhat: &Tensor,
    inv_std: &[f64],
    gamma: &[f64],
    dy: &Tensor,
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Tensor {
    let channels = gamma.len();
    let n = (xhat.len() / channels) as f64;
    let mut sum_dxhat = vec![0.0; channels];
    let mut sum_dxhat_xhat = vec![0.0; channels];
    for (hc, dc) in xhat
        .data()
        .chunks_exact(channels)
        .zip(dy.data().chunks_exact(channels))
    {
        for c in 0..channels {
            dgamma[c] += dc[c] * hc[c];
            dbeta[c] += dc[c];
            let dh = dc[c] * gamma[c];
            sum_dxhat[c] += dh;
            sum_dxhat_xhat[c] += dh * hc[c];
        }
    }
    let mut dx = dy.clone();
    for (xc, hc) in dx
        .data_mut()
        .chunks_exact_mut(channels)
        .zip(xhat.data().chunks_exact(channels))
    {
        for c in 0..channels {
            let dh = xc[c] * gamma[c];
            xc[c] = inv_std[c] / n * (n * dh - sum_dxhat[c] - hc[c] * sum_dxhat_xhat[c]);
        }
    }
    dx
}
