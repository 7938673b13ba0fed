use super::expect_rank;
use crate::error::{NnError, Result};
use crate::linalg::gemm;
use crate::tensor::Tensor;

/// Samples per im2col chunk; keeps the patch buffer cache-sized.
const CHUNK: usize = 8;

/// For output column `x`, the in-bounds input columns `[lo, hi)` of its
/// window and the kernel column `lo` maps to.
fn window(x: usize, kernel: usize, w: usize) -> (usize, usize, usize) {
    let pad = kernel / 2;
    let lo = x.saturating_sub(pad);
    let hi = (x + kernel - pad).min(w);
    (lo, hi, lo + pad - x)
}

/// Writes the patch matrix of samples `[b0, b1)` into `cols` as
/// `[(b1-b0)*h*w, k*k*c]`, same padding, columns ordered `(ky, kx, channel)`.
/// Padding entries are never written, so `cols` must start zeroed; reusing it
/// for another chunk of the same geometry keeps them zero.
fn im2col_into(x: &Tensor, b0: usize, b1: usize, kernel: usize, cols: &mut [f64]) {
    let s = x.shape();
    let (h, w, c) = (s[1], s[2], s[3]);
    let pad = kernel / 2;
    let width = kernel * kernel * c;
    let xd = x.data();
    for b in b0..b1 {
        for y in 0..h {
            for xx in 0..w {
                let row = (((b - b0) * h + y) * w + xx) * width;
                let (lo, hi, kx0) = window(xx, kernel, w);
                let span = (hi - lo) * c;
                for ky in 0..kernel {
                    let Some(iy) = (y + ky).checked_sub(pad).filter(|&iy| iy < h) else {
                        continue;
                    };
                    let src = ((b * h + iy) * w + lo) * c;
                    let dst = row + (ky * kernel + kx0) * c;
                    cols[dst..dst + span].copy_from_slice(&xd[src..src + span]);
                }
            }
        }
    }
}

/// Scatter-adds a patch-matrix gradient of samples `[b0, b1)` into `dx`.
fn col2im_add(cols: &[f64], b0: usize, b1: usize, kernel: usize, dx: &mut Tensor) {
    let s = dx.shape().to_vec();
    let (h, w, c) = (s[1], s[2], s[3]);
    let pad = kernel / 2;
    let width = kernel * kernel * c;
    let dxd = dx.data_mut();
    for b in b0..b1 {
        for y in 0..h {
            for xx in 0..w {
                let row = (((b - b0) * h + y) * w + xx) * width;
                let (lo, hi, kx0) = window(xx, kernel, w);
                let span = (hi - lo) * c;
                for ky in 0..kernel {
                    let Some(iy) = (y + ky).checked_sub(pad).filter(|&iy| iy < h) else {
                        continue;
                    };
                    let dst = ((b * h + iy) * w + lo) * c;
                    let src = row + (ky * kernel + kx0) * c;
                    for (d, s) in dxd[dst..dst + span].iter_mut().zip(&cols[src..src + span]) {
                        *d += s;
                    }
                }
            }
        }
    }
}

/// Full patch matrix `[batch*h*w, k*k*c]`.
pub fn im2col(x: &Tensor, kernel: usize) -> Vec<f64> {
    let s = x.shape();
    let mut cols = vec![0.0; s[0] * s[1] * s[2] * kernel * kernel * s[3]];
    im2col_into(x, 0, s[0], kernel, &mut cols);
    cols
}

/// Scatter-adds a full patch-matrix gradient back to NHWC layout.
pub fn col2im(cols: &[f64], shape: &[usize], kernel: usize) -> Tensor {
    let mut dx = Tensor::zeros(shape);
    col2im_add(cols, 0, shape[0], kernel, &mut dx);
    dx
}

fn check_weight(x: &Tensor, w: &Tensor, kernel: usize) -> Result<()> {
    expect_rank(x, 4, "conv2d")?;
    let c = x.shape()[3];
    if w.shape()[0] != kernel * kernel * c {
        return Err(NnError::Shape(format!(
            "conv2d weight expects {} input channels, got {c}",
            w.shape()[0] / (kernel * kernel)
        )));
    }
    Ok(())
}

/// Same-padded stride-1 convolution. `w: [k*k*in, out]`, `b: [out]`.
pub fn forward(x: &Tensor, w: &Tensor, b: &Tensor, kernel: usize) -> Result<Tensor> {
    check_weight(x, w, kernel)?;
    let s = x.shape();
    let (batch, h, wd) = (s[0], s[1], s[2]);
    let width = w.shape()[0];
    let out_c = w.shape()[1];
    let plane = h * wd;
    let mut y = Tensor::zeros(&[batch, h, wd, out_c]);
    let yd = y.data_mut();
    for r in yd.chunks_mut(out_c) {
        r.copy_from_slice(b.data());
    }
    let mut cols = vec![0.0; CHUNK.min(batch) * plane * width];
    for b0 in (0..batch).step_by(CHUNK) {
        let b1 = (b0 + CHUNK).min(batch);
        let rows = (b1 - b0) * plane;
        let buf = &mut cols[..rows * width];
        im2col_into(x, b0, b1, kernel, buf);
        let out = &mut yd[b0 * plane * out_c..b1 * plane * out_c];
        gemm(false, false, rows, out_c, width, 1.0, buf, w.data(), 1.0, out);
    }
    Ok(y)
}

/// Accumulates into `dw`/`db` from the layer input `x` and output gradient
/// `dy`; returns `dx` unless `need_dx` is false.
#[allow(clippy::too_many_arguments)]
pub fn backward(
    x: &Tensor,
    w: &Tensor,
    dy: &Tensor,
    kernel: usize,
    dw: &mut Tensor,
    db: &mut Tensor,
    need_dx: bool,
) -> Option<Tensor> {
    let s = x.shape();
    let (batch, h, wd) = (s[0], s[1], s[2]);
    let width = w.shape()[0];
    let out_c = w.shape()[1];
    let plane = h * wd;
    let dyd = dy.data();
    let dbd = db.data_mut();
    for r in dyd.chunks(out_c) {
        for (g, d) in dbd.iter_mut().zip(r) {
            *g += d;
        }
    }
    let mut dx = need_dx.then(|| Tensor::zeros(s));
    let cap = CHUNK.min(batch) * plane * width;
    let mut cols = vec![0.0; cap];
    let mut dcols = if need_dx { vec![0.0; cap] } else { Vec::new() };
    for b0 in (0..batch).step_by(CHUNK) {
        let b1 = (b0 + CHUNK).min(batch);
        let rows = (b1 - b0) * plane;
        let buf = &mut cols[..rows * width];
        im2col_into(x, b0, b1, kernel, buf);
        let g = &dyd[b0 * plane * out_c..b1 * plane * out_c];
        gemm(true, false, width, out_c, rows, 1.0, buf, g, 1.0, dw.data_mut());
        if let Some(dx) = dx.as_mut() {
            let dbuf = &mut dcols[..rows * width];
            gemm(false, true, rows, width, out_c, 1.0, g, w.data(), 0.0, dbuf);
            col2im_add(dbuf, b0, b1, kernel, dx);
        }
    }
    dx
}
