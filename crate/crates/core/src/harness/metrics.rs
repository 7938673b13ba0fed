//! Per-attribute accuracy, the uniform-guess reference row and the
//! normalized score.

use crate::dream::AttrLabels;
use crate::error::{Error, Result};
use crate::zoo::{HEAD_SIZES, NUM_ATTRIBUTES, REPORT_ORDER};

/// Accuracy (in percent) per attribute in canonical attribute order, and
/// the plain mean over the nine attributes.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeAccuracy {
    pub per_attribute: [f64; NUM_ATTRIBUTES],
    pub average: f64,
}

impl AttributeAccuracy {
    pub fn from_values(per_attribute: [f64; NUM_ATTRIBUTES]) -> Self {
        let average = per_attribute.iter().sum::<f64>() / NUM_ATTRIBUTES as f64;
        Self { per_attribute, average }
    }

    /// Values in table column order.
    pub fn report_order(&self) -> [f64; NUM_ATTRIBUTES] {
        REPORT_ORDER.map(|a| self.per_attribute[a])
    }

    /// Element-wise mean of several results; the average is recomputed
    /// from the averaged columns.
    pub fn mean(items: &[AttributeAccuracy]) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::validation("cannot average zero accuracy rows"));
        }
        let mut acc = [0.0; NUM_ATTRIBUTES];
        for it in items {
            for (a, v) in acc.iter_mut().zip(it.per_attribute) {
                *a += v;
            }
        }
        Ok(Self::from_values(acc.map(|v| v / items.len() as f64)))
    }
}

pub fn per_attribute_accuracy(pred: &[AttrLabels], truth: &[AttrLabels]) -> Result<AttributeAccuracy> {
    if pred.len() != truth.len() {
        return Err(Error::validation(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    if truth.is_empty() {
        return Err(Error::validation("accuracy over an empty set"));
    }
    let mut hits = [0usize; NUM_ATTRIBUTES];
    for (p, t) in pred.iter().zip(truth) {
        for a in 0..NUM_ATTRIBUTES {
            hits[a] += (p[a] == t[a]) as usize;
        }
    }
    Ok(AttributeAccuracy::from_values(hits.map(|h| 100.0 * h as f64 / truth.len() as f64)))
}

/// Expected accuracy of a uniform guess: `100 / |head|` per attribute.
pub fn random_row() -> AttributeAccuracy {
    AttributeAccuracy::from_values(HEAD_SIZES.map(|k| 100.0 / k as f64))
}

/// `(raw - random) / (100 - random)` for one attribute: 0 at chance, 1 at
/// perfect, negative below chance.
pub fn normalized_accuracy(raw: f64, attribute: usize) -> f64 {
    let r = 100.0 / HEAD_SIZES[attribute] as f64;
    (raw - r) / (100.0 - r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_row_in_table_order() {
        let r = random_row().report_order();
        let expect = [25.0, 50.0, 50.0, 50.0, 100.0 / 3.0, 100.0 / 3.0, 100.0 / 3.0, 100.0 / 3.0, 50.0];
        for (a, b) in r.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((random_row().average - 39.81).abs() < 0.005);
    }

    #[test]
    fn counts_hits_per_head() {
        let t = [[0; 9], [1; 9]];
        let mut p = t;
        p[1][0] = 3;
        let acc = per_attribute_accuracy(&p, &t).unwrap();
        assert_eq!(acc.per_attribute[0], 50.0);
        assert_eq!(acc.per_attribute[1], 100.0);
        assert!(per_attribute_accuracy(&p[..1], &t).is_err());
    }

    #[test]
    fn normalization_maps_chance_to_zero_and_perfect_to_one() {
        let r = random_row();
        for a in 0..NUM_ATTRIBUTES {
            assert!(normalized_accuracy(r.per_attribute[a], a).abs() < 1e-12);
            assert!((normalized_accuracy(100.0, a) - 1.0).abs() < 1e-12);
        }
        assert!((normalized_accuracy(62.5, 1) - 0.25).abs() < 1e-12);
        assert!(normalized_accuracy(0.0, 0) < 0.0);
    }
}
