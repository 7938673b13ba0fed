use std::fmt;
use std::str::FromStr;

use crate::error::{NnError, Result};
use crate::network::{Network, Param};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptimizerKind {
    Sgd,
    Adam,
    RmsProp,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Sgd, OptimizerKind::Adam, OptimizerKind::RmsProp];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::RmsProp => "rmsprop",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            other => Err(NnError::Optimizer(format!("unknown optimizer '{other}'"))),
        }
    }
}

/// First-order optimizer state.
///
/// Moment buffers are allocated on the first step and pinned to the
/// parameter sizes seen then.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub rho: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Result<Self> {
        if !(lr.is_finite() && lr >= 0.0) {
            return Err(NnError::Optimizer(format!("learning rate {lr} must be finite and >= 0")));
        }
        Ok(Self {
            kind,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            rho: 0.99,
            eps: 1e-8,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step_network(&mut self, net: &mut Network) -> Result<()> {
        self.step(&mut net.params_mut())
    }

    /// Applies one update from the accumulated gradients.
    pub fn step(&mut self, params: &mut [&mut Param]) -> Result<()> {
        if params.iter().any(|p| !p.grad.is_finite()) {
            return Err(NnError::NonFinite("optimizer gradient".into()));
        }
        if self.first.is_empty() && self.kind != OptimizerKind::Sgd {
            self.first = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
            self.second = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
        }
        if self.kind != OptimizerKind::Sgd
            && (self.first.len() != params.len()
                || self.first.iter().zip(params.iter()).any(|(m, p)| m.len() != p.value.len()))
        {
            return Err(NnError::Optimizer("parameter shapes changed between steps".into()));
        }
        self.step += 1;
        let t = self.step as f64;
        let lr = self.lr;
        let write = lr != 0.0;
        match self.kind {
            OptimizerKind::Sgd => {
                if write {
                    for p in params.iter_mut() {
                        let Param { value, grad } = &mut **p;
                        for (w, g) in value.data_mut().iter_mut().zip(grad.data()) {
                            *w -= lr * g;
                        }
                    }
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
                let c1 = 1.0 - b1.powf(t);
                let c2 = 1.0 - b2.powf(t);
                for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
                    let Param { value, grad } = &mut **p;
                    for (((w, g), mi), vi) in value
                        .data_mut()
                        .iter_mut()
                        .zip(grad.data())
                        .zip(m.iter_mut())
                        .zip(v.iter_mut())
                    {
                        *mi = b1 * *mi + (1.0 - b1) * g;
                        *vi = b2 * *vi + (1.0 - b2) * g * g;
                        if write {
                            let mhat = *mi / c1;
                            let vhat = *vi / c2;
                            *w -= lr * mhat / (vhat.sqrt() + eps);
                        }
                    }
                }
            }
            OptimizerKind::RmsProp => {
                let (rho, eps) = (self.rho, self.eps);
                for (p, v) in params.iter_mut().zip(&mut self.second) {
                    let Param { value, grad } = &mut **p;
                    for ((w, g), vi) in value.data_mut().iter_mut().zip(grad.data()).zip(v.iter_mut()) {
                        *vi = rho * *vi + (1.0 - rho) * g * g;
                        if write {
                            *w -= lr * g / (vi.sqrt() + eps);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
