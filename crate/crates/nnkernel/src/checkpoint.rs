//! Little-endian binary checkpoint for a [`Network`].
//!
//! ```text
//! magic      8 bytes  "NNKCKPT1"
//! n_layers   u32
//! layer      u8 kind, then kind-specific fields:
//!              0 dense      inputs u32, outputs u32
//!              1 conv2d     in u32, out u32, kernel u32
//!              2 activation u8 (0 relu, 1 prelu, 2 elu, 3 tanh, 4 sigmoid)
//!              3 dropout    rate f64
//!              4 batchnorm  channels u32
//!              5 maxpool
//!              6 flatten
//! n_tensors  u32
//! tensor     ndim u32, dims u32 x ndim, values f64 x product(dims)
//! ```
//!
//! Tensors are the network state in [`Network::state`] order: trainable
//! parameters then buffers, layer by layer.

use std::io::{Read, Write};

use crate::error::{NnError, Result};
use crate::network::Network;
use crate::spec::{Activation, LayerSpec};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"NNKCKPT1";

const ACTIVATIONS: [Activation; 5] = [
    Activation::Relu,
    Activation::Prelu,
    Activation::Elu,
    Activation::Tanh,
    Activation::Sigmoid,
];

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| NnError::Checkpoint(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_network<W: Write>(w: &mut W, net: &Network) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    let specs = net.specs();
    put_u32(w, specs.len())?;
    for spec in &specs {
        match *spec {
            LayerSpec::Dense { inputs, outputs } => {
                w.write_all(&[0])?;
                put_u32(w, inputs)?;
                put_u32(w, outputs)?;
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } => {
                w.write_all(&[1])?;
                put_u32(w, in_channels)?;
                put_u32(w, out_channels)?;
                put_u32(w, kernel)?;
            }
            LayerSpec::Activation(a) => {
                let code = ACTIVATIONS.iter().position(|&x| x == a).expect("known activation");
                w.write_all(&[2, code as u8])?;
            }
            LayerSpec::Dropout { rate } => {
                w.write_all(&[3])?;
                w.write_all(&rate.to_le_bytes())?;
            }
            LayerSpec::BatchNorm { channels } => {
                w.write_all(&[4])?;
                put_u32(w, channels)?;
            }
            LayerSpec::MaxPool => w.write_all(&[5])?,
            LayerSpec::Flatten => w.write_all(&[6])?,
        }
    }
    let state = net.state();
    put_u32(w, state.len())?;
    for t in state {
        put_u32(w, t.shape().len())?;
        for &d in t.shape() {
            put_u32(w, d)?;
        }
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_network<R: Read>(r: &mut R) -> Result<Network> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let n_layers = get_u32(r)?;
    let mut specs = Vec::with_capacity(n_layers.min(1024));
    for i in 0..n_layers {
        let spec = match get_u8(r)? {
            0 => LayerSpec::Dense {
                inputs: get_u32(r)?,
                outputs: get_u32(r)?,
            },
            1 => LayerSpec::Conv2d {
                in_channels: get_u32(r)?,
                out_channels: get_u32(r)?,
                kernel: get_u32(r)?,
            },
            2 => {
                let code = get_u8(r)? as usize;
                let a = ACTIVATIONS
                    .get(code)
                    .ok_or_else(|| NnError::Checkpoint(format!("layer {i}: unknown activation code {code}")))?;
                LayerSpec::Activation(*a)
            }
            3 => LayerSpec::Dropout { rate: get_f64(r)? },
            4 => LayerSpec::BatchNorm { channels: get_u32(r)? },
            5 => LayerSpec::MaxPool,
            6 => LayerSpec::Flatten,
            k => return Err(NnError::Checkpoint(format!("layer {i}: unknown kind {k}"))),
        };
        specs.push(spec);
    }
    let n_tensors = get_u32(r)?;
    let mut state = Vec::with_capacity(n_tensors.min(4096));
    for _ in 0..n_tensors {
        let ndim = get_u32(r)?;
        let dims = (0..ndim).map(|_| get_u32(r)).collect::<Result<Vec<_>>>()?;
        let n: usize = dims.iter().product();
        let mut bytes = vec![0u8; n * 8];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        state.push(Tensor::new(dims, data)?);
    }
    Network::from_state(&specs, state)
}
