//! White-box architecture scheme: `n_conv` conv blocks, `n_fc` fully
//! connected blocks and a linear classifier.
//!
//! conv block = k x k conv, [batchnorm], [2x2 maxpool], activation
//! fc block   = linear, activation, [dropout]

use nnkernel::{LayerSpec, NnError};

use super::attributes::AttributeVector;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArchWidths {
    pub conv_channels: usize,
    pub fc_width: usize,
    pub dropout_rate: f64,
}

impl Default for ArchWidths {
    fn default() -> Self {
        Self {
            conv_channels: 6,
            fc_width: 32,
            dropout_rate: 0.1,
        }
    }
}

/// Layer stack for `attrs` on `side x side` single-channel input with
/// `classes` outputs (logits).
pub fn build_model(attrs: &AttributeVector, classes: usize, side: usize, widths: ArchWidths) -> Result<Vec<LayerSpec>> {
    let act = LayerSpec::Activation(attrs.activation);
    let mut layers = Vec::new();
    let mut spatial = side;
    let mut channels = 1;
    for block in 0..attrs.n_conv {
        layers.push(LayerSpec::Conv2d {
            in_channels: channels,
            out_channels: widths.conv_channels,
            kernel: attrs.kernel_size,
        });
        channels = widths.conv_channels;
        if attrs.batchnorm {
            layers.push(LayerSpec::BatchNorm { channels });
        }
        if attrs.maxpool {
            spatial /= 2;
            if spatial == 0 {
                return Err(NnError::SpatialCollapse(format!(
                    "{side}x{side} input pooled {} times (block {})",
                    block + 1,
                    block + 1
                ))
                .into());
            }
            layers.push(LayerSpec::MaxPool);
        }
        layers.push(act.clone());
    }
    layers.push(LayerSpec::Flatten);
    let mut width = spatial * spatial * channels;
    for _ in 0..attrs.n_fc {
        layers.push(LayerSpec::Dense {
            inputs: width,
            outputs: widths.fc_width,
        });
        width = widths.fc_width;
        layers.push(act.clone());
        if attrs.dropout {
            layers.push(LayerSpec::Dropout {
                rate: widths.dropout_rate,
            });
        }
    }
    layers.push(LayerSpec::Dense {
        inputs: width,
        outputs: classes,
    });
    for l in &layers {
        l.validate()?;
    }
    Ok(layers)
}
