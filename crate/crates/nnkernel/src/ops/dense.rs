use super::expect_rank;
use crate::error::{NnError, Result};
use crate::linalg::gemm;
use crate::tensor::Tensor;

/// `y = x w + b` with `x: [batch, in]`, `w: [in, out]`, `b: [out]`.
pub fn forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    expect_rank(x, 2, "dense")?;
    let (batch, inputs) = (x.shape()[0], x.shape()[1]);
    let outputs = w.shape()[1];
    if w.shape()[0] != inputs {
        return Err(NnError::Shape(format!(
            "dense expects {} inputs, got {inputs}",
            w.shape()[0]
        )));
    }
    let mut y = Tensor::zeros(&[batch, outputs]);
    for r in 0..batch {
        y.row_mut(r).copy_from_slice(b.data());
    }
    gemm(false, false, batch, outputs, inputs, 1.0, x.data(), w.data(), 1.0, y.data_mut());
    Ok(y)
}

/// Accumulates parameter gradients into `dw`/`db` and returns `dx`.
pub fn backward(x: &Tensor, w: &Tensor, dy: &Tensor, dw: &mut Tensor, db: &mut Tensor) -> Tensor {
    let (batch, inputs) = (x.shape()[0], x.shape()[1]);
    let outputs = w.shape()[1];
    gemm(true, false, inputs, outputs, batch, 1.0, x.data(), dy.data(), 1.0, dw.data_mut());
    let dbd = db.data_mut();
    for r in 0..batch {
        for (g, d) in dbd.iter_mut().zip(dy.row(r)) {
            *g += d;
        }
    }
    let mut dx = Tensor::zeros(&[batch, inputs]);
    gemm(false, true, batch, inputs, outputs, 1.0, dy.data(), w.data(), 0.0, dx.data_mut());
    dx
}
