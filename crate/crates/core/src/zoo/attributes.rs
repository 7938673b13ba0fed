//! The nine-attribute grid a white-box model is drawn from.

use std::fmt;

use nnkernel::{Activation, OptimizerKind};

use crate::error::{Error, Result};
use crate::seed::fnv1a;

pub const NUM_ATTRIBUTES: usize = 9;

/// Canonical attribute order (also the token order in every file format).
pub const ATTRIBUTE_NAMES: [&str; NUM_ATTRIBUTES] =
    ["act", "drop", "pool", "bn", "ks", "conv", "fc", "opt", "bs"];

/// Number of values per attribute, in canonical order.
pub const HEAD_SIZES: [usize; NUM_ATTRIBUTES] = [4, 2, 2, 2, 2, 3, 3, 3, 3];

/// Column order of the accuracy tables: act, drop, pool, ks, conv, fc, opt, bs, bn.
pub const REPORT_ORDER: [usize; NUM_ATTRIBUTES] = [0, 1, 2, 4, 5, 6, 7, 8, 3];

pub const KERNEL_SIZES: [usize; 2] = [3, 5];
pub const LAYER_COUNTS: [usize; 3] = [2, 3, 4];
pub const BATCH_SIZES: [usize; 3] = [32, 64, 128];

/// Total number of head outputs (sum of [`HEAD_SIZES`]).
pub const TOTAL_HEAD_OUTPUTS: usize = 24;

/// Offset of each head inside a concatenated 24-wide logit row.
pub fn head_offsets() -> [usize; NUM_ATTRIBUTES] {
    let mut out = [0; NUM_ATTRIBUTES];
    let mut acc = 0;
    for (o, s) in out.iter_mut().zip(HEAD_SIZES) {
        *o = acc;
        acc += s;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeVector {
    pub activation: Activation,
    pub dropout: bool,
    pub maxpool: bool,
    pub batchnorm: bool,
    pub kernel_size: usize,
    pub n_conv: usize,
    pub n_fc: usize,
    pub optimizer: OptimizerKind,
    pub batch_size: usize,
}

fn yes_no_index(v: bool) -> usize {
    if v {
        0
    } else {
        1
    }
}

fn position(values: &[usize], v: usize) -> usize {
    values.iter().position(|&x| x == v).expect("attribute value inside grid")
}

impl AttributeVector {
    /// Value index per attribute; yes/no attributes map yes to 0.
    pub fn indices(&self) -> [usize; NUM_ATTRIBUTES] {
        [
            Activation::HIDDEN.iter().position(|&a| a == self.activation).expect("hidden activation"),
            yes_no_index(self.dropout),
            yes_no_index(self.maxpool),
            yes_no_index(self.batchnorm),
            position(&KERNEL_SIZES, self.kernel_size),
            position(&LAYER_COUNTS, self.n_conv),
            position(&LAYER_COUNTS, self.n_fc),
            OptimizerKind::ALL.iter().position(|&o| o == self.optimizer).expect("optimizer"),
            position(&BATCH_SIZES, self.batch_size),
        ]
    }

    pub fn from_indices(idx: [usize; NUM_ATTRIBUTES]) -> Result<Self> {
        for (a, (&i, &n)) in idx.iter().zip(&HEAD_SIZES).enumerate() {
            if i >= n {
                return Err(Error::validation(format!(
                    "value index {i} out of range for attribute {}",
                    ATTRIBUTE_NAMES[a]
                )));
            }
        }
        Ok(Self {
            activation: Activation::HIDDEN[idx[0]],
            dropout: idx[1] == 0,
            maxpool: idx[2] == 0,
            batchnorm: idx[3] == 0,
            kernel_size: KERNEL_SIZES[idx[4]],
            n_conv: LAYER_COUNTS[idx[5]],
            n_fc: LAYER_COUNTS[idx[6]],
            optimizer: OptimizerKind::ALL[idx[7]],
            batch_size: BATCH_SIZES[idx[8]],
        })
    }

    /// Tokens in canonical order, e.g. `relu yes no yes 3 2 4 adam 64`.
    pub fn tokens(&self) -> [String; NUM_ATTRIBUTES] {
        let yn = |b: bool| if b { "yes" } else { "no" }.to_string();
        [
            self.activation.name().to_string(),
            yn(self.dropout),
            yn(self.maxpool),
            yn(self.batchnorm),
            self.kernel_size.to_string(),
            self.n_conv.to_string(),
            self.n_fc.to_string(),
            self.optimizer.name().to_string(),
            self.batch_size.to_string(),
        ]
    }

    pub fn parse_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<Self> {
        if tokens.len() != NUM_ATTRIBUTES {
            return Err(Error::validation(format!(
                "expected {NUM_ATTRIBUTES} attribute tokens, got {}",
                tokens.len()
            )));
        }
        let t = |i: usize| tokens[i].as_ref().trim();
        let yn = |i: usize| match t(i) {
            "yes" => Ok(true),
            "no" => Ok(false),
            other => Err(Error::validation(format!(
                "attribute {}: expected yes/no, got '{other}'",
                ATTRIBUTE_NAMES[i]
            ))),
        };
        let num = |i: usize, allowed: &[usize]| -> Result<usize> {
            let v: usize = t(i).parse().map_err(|_| {
                Error::validation(format!("attribute {}: bad number '{}'", ATTRIBUTE_NAMES[i], t(i)))
            })?;
            if !allowed.contains(&v) {
                return Err(Error::validation(format!(
                    "attribute {}: {v} not in {allowed:?}",
                    ATTRIBUTE_NAMES[i]
                )));
            }
            Ok(v)
        };
        let activation: Activation = t(0)
            .parse()
            .map_err(|_| Error::validation(format!("attribute act: unknown '{}'", t(0))))?;
        if !Activation::HIDDEN.contains(&activation) {
            return Err(Error::validation(format!("attribute act: '{}' not allowed", t(0))));
        }
        Ok(Self {
            activation,
            dropout: yn(1)?,
            maxpool: yn(2)?,
            batchnorm: yn(3)?,
            kernel_size: num(4, &KERNEL_SIZES)?,
            n_conv: num(5, &LAYER_COUNTS)?,
            n_fc: num(6, &LAYER_COUNTS)?,
            optimizer: t(7)
                .parse()
                .map_err(|_| Error::validation(format!("attribute opt: unknown '{}'", t(7))))?,
            batch_size: num(8, &BATCH_SIZES)?,
        })
    }
}

impl fmt::Display for AttributeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens().join(" "))
    }
}

/// A (possibly restricted) product grid over attribute value indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeGrid {
    values: [Vec<usize>; NUM_ATTRIBUTES],
}

impl Default for AttributeGrid {
    fn default() -> Self {
        Self::full()
    }
}

impl AttributeGrid {
    pub fn full() -> Self {
        Self {
            values: HEAD_SIZES.map(|n| (0..n).collect()),
        }
    }

    /// Grid with each attribute restricted to the given value indices.
    pub fn restricted(values: [Vec<usize>; NUM_ATTRIBUTES]) -> Result<Self> {
        for (a, vs) in values.iter().enumerate() {
            if vs.is_empty() || vs.iter().any(|&v| v >= HEAD_SIZES[a]) {
                return Err(Error::validation(format!(
                    "attribute {} restricted to invalid set {vs:?}",
                    ATTRIBUTE_NAMES[a]
                )));
            }
        }
        let mut values = values;
        for vs in &mut values {
            vs.sort_unstable();
            vs.dedup();
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lexicographic enumeration: activation varies slowest, batch size
    /// fastest, each attribute's values in canonical order.
    pub fn enumerate(&self) -> Vec<AttributeVector> {
        let mut out = Vec::with_capacity(self.len());
        let mut cursor = [0usize; NUM_ATTRIBUTES];
        loop {
            let idx: [usize; NUM_ATTRIBUTES] = std::array::from_fn(|a| self.values[a][cursor[a]]);
            out.push(AttributeVector::from_indices(idx).expect("grid indices are in range"));
            let mut a = NUM_ATTRIBUTES;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                cursor[a] += 1;
                if cursor[a] < self.values[a].len() {
                    break;
                }
                cursor[a] = 0;
            }
        }
    }

    pub fn contains(&self, attrs: &AttributeVector) -> bool {
        attrs
            .indices()
            .iter()
            .zip(&self.values)
            .all(|(i, vs)| vs.contains(i))
    }

    /// Stable 64-bit identity of the grid, written into file headers.
    pub fn hash(&self) -> u64 {
        let desc: Vec<String> = ATTRIBUTE_NAMES
            .iter()
            .zip(&self.values)
            .map(|(n, vs)| {
                let vs: Vec<String> = vs.iter().map(ToString::to_string).collect();
                format!("{n}={}", vs.join(","))
            })
            .collect();
        fnv1a(desc.join(";").as_bytes())
    }
}

pub fn format_grid_hash(h: u64) -> String {
    format!("{h:016x}")
}
