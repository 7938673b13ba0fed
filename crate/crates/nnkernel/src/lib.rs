//! A minimal, deterministic neural-network kernel.
//!
//! Every layer has a hand-written forward and backward pass over row-major
//! `f64` tensors. There is no autodiff graph: a [`Network`] is an ordered
//! list of layers, each caching what its backward pass needs during a
//! train-mode forward.
//!
//! Layout conventions:
//! - dense layers take `[batch, features]`
//! - convolution, batchnorm and max-pooling take NHWC `[batch, h, w, c]`
//!   (batchnorm also accepts `[batch, features]`, normalizing the last axis)

mod checkpoint;
mod error;
pub mod init;
pub mod linalg;
mod loss;
mod network;
pub mod ops;
mod optim;
mod spec;
mod tensor;

pub use checkpoint::{read_network, write_network, CHECKPOINT_MAGIC};
pub use error::{NnError, Result};
pub use init::Init;
pub use loss::{cross_entropy, log_softmax_rows, softmax, softmax_cross_entropy, softmax_rows};
pub use network::{Mode, Network, Param};
pub use optim::{Optimizer, OptimizerKind};
pub use spec::{Activation, LayerSpec};
pub use tensor::Tensor;
