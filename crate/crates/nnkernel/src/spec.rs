use std::fmt;
use std::str::FromStr;

use crate::error::{NnError, Result};

/// Element-wise non-linearities.
///
/// `Relu`, `Prelu`, `Elu` and `Tanh` are the hidden activations a model may
/// be built with; `Sigmoid` is reserved for probability outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Activation {
    Relu,
    Prelu,
    Elu,
    Tanh,
    Sigmoid,
}

impl Activation {
    /// Hidden-layer activations, in their canonical order.
    pub const HIDDEN: [Activation; 4] = [
        Activation::Relu,
        Activation::Prelu,
        Activation::Elu,
        Activation::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Prelu => "prelu",
            Activation::Elu => "elu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "prelu" => Ok(Activation::Prelu),
            "elu" => Ok(Activation::Elu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(NnError::InvalidSpec(format!("unknown activation '{other}'"))),
        }
    }
}

/// One layer of a [`crate::Network`].
#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    Dense { inputs: usize, outputs: usize },
    /// Stride-1 "same"-padded convolution over NHWC input.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
    },
    Activation(Activation),
    Dropout { rate: f64 },
    /// Normalizes the last axis using statistics over every other axis.
    BatchNorm { channels: usize },
    /// 2x2 window, stride 2, floor division of spatial dims.
    MaxPool,
    /// `[batch, ...]` to `[batch, product]`.
    Flatten,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Dense { inputs, outputs } if inputs == 0 || outputs == 0 => Err(
                NnError::InvalidSpec(format!("dense {inputs}->{outputs} has an empty side")),
            ),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } => {
                if kernel != 3 && kernel != 5 {
                    return Err(NnError::InvalidSpec(format!(
                        "kernel size {kernel} not in {{3, 5}}"
                    )));
                }
                if in_channels == 0 || out_channels == 0 {
                    return Err(NnError::InvalidSpec("conv with zero channels".into()));
                }
                Ok(())
            }
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => Err(
                NnError::InvalidSpec(format!("dropout rate {rate} not in [0, 1)")),
            ),
            LayerSpec::BatchNorm { channels: 0 } => {
                Err(NnError::InvalidSpec("batchnorm with zero channels".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn has_weights(&self) -> bool {
        matches!(self, LayerSpec::Dense { .. } | LayerSpec::Conv2d { .. })
    }
}
