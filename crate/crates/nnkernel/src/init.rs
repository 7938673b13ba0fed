//! Weight initialization schemes. Biases always start at zero.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Uniform in `±sqrt(6 / fan_in)`.
    KaimingUniform,
    /// `N(0, std^2)`.
    Normal { std: f64 },
    /// All zeros; used when state is loaded from elsewhere.
    Zeros,
}

impl Init {
    pub(crate) fn fill<R: Rng + ?Sized>(self, values: &mut [f64], fan_in: usize, rng: &mut R) {
        match self {
            Init::KaimingUniform => {
                let bound = (6.0 / fan_in.max(1) as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                values.iter_mut().for_each(|v| *v = dist.sample(rng));
            }
            Init::Zeros => values.fill(0.0),
            Init::Normal { std } => {
                let dist = Normal::new(0.0, std).expect("std must be finite and >= 0");
                values.iter_mut().for_each(|v| *v = dist.sample(rng));
            }
        }
    }
}
