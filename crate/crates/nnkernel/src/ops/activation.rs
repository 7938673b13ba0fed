use crate::spec::Activation;
use crate::tensor::Tensor;

pub const PRELU_INIT_SLOPE: f64 = 0.25;
pub const ELU_ALPHA: f64 = 1.0;

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Applies `act`; `slope` is only read for PReLU.
pub fn forward(act: Activation, x: &Tensor, slope: f64) -> Tensor {
    let mut y = x.clone();
    let f: fn(f64, f64) -> f64 = match act {
        Activation::Relu => |v, _| if v > 0.0 { v } else { 0.0 },
        Activation::Prelu => |v, a| if v > 0.0 { v } else { a * v },
        Activation::Elu => |v, _| if v > 0.0 { v } else { ELU_ALPHA * v.exp_m1() },
        Activation::Tanh => |v, _| v.tanh(),
        Activation::Sigmoid => |v, _| sigmoid(v),
    };
    y.data_mut().iter_mut().for_each(|v| *v = f(*v, slope));
    y
}

/// Returns `dx` and, for PReLU, the slope gradient.
pub fn backward(act: Activation, x: &Tensor, y: &Tensor, dy: &Tensor, slope: f64) -> (Tensor, f64) {
    let mut dx = dy.clone();
    let mut dslope = 0.0;
    let it = dx.data_mut().iter_mut().zip(x.data()).zip(y.data());
    match act {
        Activation::Relu => it.for_each(|((g, &xv), _)| {
            if xv <= 0.0 {
                *g = 0.0
            }
        }),
        Activation::Prelu => it.for_each(|((g, &xv), _)| {
            if xv <= 0.0 {
                dslope += *g * xv;
                *g *= slope;
            }
        }),
        Activation::Elu => it.for_each(|((g, &xv), &yv)| {
            if xv <= 0.0 {
                *g *= yv + ELU_ALPHA
            }
        }),
        Activation::Tanh => it.for_each(|((g, _), &yv)| *g *= 1.0 - yv * yv),
        Activation::Sigmoid => it.for_each(|((g, _), &yv)| *g *= yv * (1.0 - yv)),
    }
    (dx, dslope)
}
