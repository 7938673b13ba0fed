//! Domain probe: a multinomial logistic regression that predicts the domain
//! of a row from its features. Low held-out accuracy means the features
//! carry little domain information.

use nnkernel::{softmax_rows, Tensor};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::zoo::argmax;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Share of each domain's rows used to fit the probe.
    pub train_fraction: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            lr: 0.5,
            epochs: 300,
            l2: 1e-3,
            train_fraction: 0.5,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.l2 >= 0.0 && self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("probe needs lr > 0, l2 >= 0 and 0 < train_fraction < 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResult {
    /// Held-out accuracy in percent.
    pub accuracy: f64,
    pub chance: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Per-domain stratified split of row indices.
fn stratified_split(domains: &[usize], m: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for d in 0..m {
        let mut rows: Vec<usize> = (0..domains.len()).filter(|&r| domains[r] == d).collect();
        rows.shuffle(&mut seed::rng(seed::derive_labeled(seed, "probe-split", d as u64)));
        let k = ((rows.len() as f64 * fraction).round() as usize).clamp(1, rows.len() - 1);
        train.extend_from_slice(&rows[..k]);
        test.extend_from_slice(&rows[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Fits the probe on a seeded stratified half of the rows (features
/// standardized with training statistics, full-batch gradient descent)
/// and reports accuracy on the other half.
pub fn domain_probe(features: &Tensor, domains: &[usize], cfg: &ProbeConfig, seed: u64) -> Result<ProbeResult> {
    cfg.validate()?;
    if features.rows() != domains.len() {
        return Err(Error::validation("one domain tag per feature row is required"));
    }
    let m = domains.iter().max().map_or(0, |d| d + 1);
    let counts: Vec<usize> = (0..m).map(|d| domains.iter().filter(|&&x| x == d).count()).collect();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::validation("the domain probe needs at least two domains"));
    }
    if let Some(d) = counts.iter().position(|&c| c < 2) {
        return Err(Error::validation(format!("domain {d} has fewer than two rows")));
    }
    let (train, test) = stratified_split(domains, m, cfg.train_fraction, seed);
    let d = features.row_len();
    let mut mean = vec![0.0; d];
    let mut sd = vec![0.0; d];
    for &r in &train {
        for (a, v) in mean.iter_mut().zip(features.row(r)) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= train.len() as f64);
    for &r in &train {
        for ((a, v), mu) in sd.iter_mut().zip(features.row(r)).zip(&mean) {
            *a += (v - mu).powi(2);
        }
    }
    sd.iter_mut().for_each(|v| *v = (*v / train.len() as f64).sqrt().max(1e-8));
    let standardize = |r: usize| -> Vec<f64> {
        features.row(r).iter().zip(&mean).zip(&sd).map(|((v, mu), s)| (v - mu) / s).collect()
    };
    let xtr: Vec<Vec<f64>> = train.iter().map(|&r| standardize(r)).collect();

    let mut w = vec![0.0; d * m];
    let mut b = vec![0.0; m];
    let n = train.len() as f64;
    let scores = |x: &[f64], w: &[f64], b: &[f64]| -> Vec<f64> {
        (0..m).map(|k| b[k] + x.iter().enumerate().map(|(j, v)| v * w[j * m + k]).sum::<f64>()).collect()
    };
    for _ in 0..cfg.epochs {
        let mut gw: Vec<f64> = w.iter().map(|v| cfg.l2 * v).collect();
        let mut gb = vec![0.0; m];
        for (x, &r) in xtr.iter().zip(&train) {
            let mut p = softmax_rows(&scores(x, &w, &b));
            p[domains[r]] -= 1.0;
            for (k, pk) in p.iter().enumerate() {
                gb[k] += pk / n;
                for (j, v) in x.iter().enumerate() {
                    gw[j * m + k] += v * pk / n;
                }
            }
        }
        for (a, g) in w.iter_mut().zip(&gw) {
            *a -= cfg.lr * g;
        }
        for (a, g) in b.iter_mut().zip(&gb) {
            *a -= cfg.lr * g;
        }
    }
    let hits = test
        .iter()
        .filter(|&&r| argmax(&scores(&standardize(r), &w, &b)) == domains[r])
        .count();
    Ok(ProbeResult {
        accuracy: 100.0 * hits as f64 / test.len() as f64,
        chance: 100.0 / counts.iter().filter(|&&c| c > 0).count() as f64,
        n_train: train.len(),
        n_test: test.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn sample(shift: f64, m: usize, per: usize, seed_: u64) -> (Tensor, Vec<usize>) {
        let mut rng = seed::rng(seed_);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut tags = Vec::new();
        for d in 0..m {
            for _ in 0..per {
                rows.push(vec![noise.sample(&mut rng) + shift * d as f64, noise.sample(&mut rng)]);
                tags.push(d);
            }
        }
        (Tensor::from_rows(&rows).unwrap(), tags)
    }

    #[test]
    fn identical_distributions_give_chance_accuracy() {
        let (x, tags) = sample(0.0, 3, 200, 4);
        let r = domain_probe(&x, &tags, &ProbeConfig::default(), 1).unwrap();
        assert!((r.accuracy - 100.0 / 3.0).abs() < 10.0, "{}", r.accuracy);
        assert_eq!(r.n_train + r.n_test, 600);
    }

    #[test]
    fn separated_domains_are_detected() {
        let (x, tags) = sample(6.0, 3, 100, 4);
        let r = domain_probe(&x, &tags, &ProbeConfig::default(), 1).unwrap();
        assert!(r.accuracy > 95.0, "{}", r.accuracy);
    }

    #[test]
    fn single_domain_is_rejected() {
        let (x, tags) = sample(0.0, 1, 10, 4);
        assert!(domain_probe(&x, &tags, &ProbeConfig::default(), 1).is_err());
    }
}
