//! Stateless forward/backward kernels used by the network layers.

pub mod activation;
pub mod conv;
pub mod dense;
pub mod norm;
pub mod pool;

use crate::error::{NnError, Result};
use crate::tensor::Tensor;

pub(crate) fn expect_rank(t: &Tensor, rank: usize, what: &str) -> Result<()> {
    if t.shape().len() != rank {
        return Err(NnError::Shape(format!(
            "{what} expects rank {rank}, got {:?}",
            t.shape()
        )));
    }
    Ok(())
}
