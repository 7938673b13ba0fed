use super::expect_rank;
use crate::error::{NnError, Result};
use crate::tensor::Tensor;

/// 2x2/stride-2 max pooling over NHWC. Returns output and, for each output
/// element, the flat input index that won (first maximum on ties).
pub fn max_forward(x: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    expect_rank(x, 4, "maxpool")?;
    let s = x.shape();
    let (batch, h, w, c) = (s[0], s[1], s[2], s[3]);
    let (oh, ow) = (h / 2, w / 2);
    if oh == 0 || ow == 0 {
        return Err(NnError::SpatialCollapse(format!("maxpool on {h}x{w}")));
    }
    let xd = x.data();
    let mut out = Tensor::zeros(&[batch, oh, ow, c]);
    let mut arg = vec![0usize; out.len()];
    let od = out.data_mut();
    for b in 0..batch {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_i = 0;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let i = ((b * h + 2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                            if xd[i] > best {
                                best = xd[i];
                                best_i = i;
                            }
                        }
                    }
                    let o = ((b * oh + oy) * ow + ox) * c + ch;
                    od[o] = best;
                    arg[o] = best_i;
                }
            }
        }
    }
    Ok((out, arg))
}

pub fn max_backward(in_shape: &[usize], arg: &[usize], dy: &Tensor) -> Tensor {
    let mut dx = Tensor::zeros(in_shape);
    let dxd = dx.data_mut();
    for (&i, &g) in arg.iter().zip(dy.data()) {
        dxd[i] += g;
    }
    dx
}
