//! Query sets, fingerprint collection and the fingerprint text format.
//!
//! A fingerprint is the concatenation of a model's softmax outputs on a
//! fixed, ordered set of N query images: a vector of C*N probabilities.

mod io;

use nnkernel::{softmax_rows, Network, Tensor};
use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::par;
use crate::seed;
use crate::zoo::{AttributeVector, DomainData, ModelStatus, ModelZoo};

pub use io::{format_fingerprints, parse_fingerprints, read_fingerprints, write_fingerprints, SIMPLEX_TOLERANCE};

/// Ordered query images drawn in equal numbers from each source domain.
#[derive(Clone, Debug, PartialEq)]
pub struct QuerySet {
    /// `[N, side, side, 1]`
    pub images: Tensor,
    /// Source domain of each query.
    pub sources: Vec<usize>,
    pub seed: u64,
}

impl QuerySet {
    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

/// Samples `n / sources.len()` images (without replacement) from each
/// listed domain, optionally restricted to images whose label is in
/// `classes`. Queries are grouped by source domain in the order given.
pub fn build_query_set(
    datasets: &[DomainData],
    sources: &[usize],
    n: usize,
    classes: Option<&[usize]>,
    seed: u64,
) -> Result<QuerySet> {
    if n == 0 {
        return Err(Error::validation("query count N must be positive"));
    }
    if sources.is_empty() {
        return Err(Error::validation("at least one source domain is required"));
    }
    if !n.is_multiple_of(sources.len()) {
        return Err(Error::validation(format!(
            "query count {n} is not divisible by {} source domains",
            sources.len()
        )));
    }
    let per = n / sources.len();
    let mut picked = Vec::with_capacity(n);
    let mut tags = Vec::with_capacity(n);
    for &d in sources {
        let data = datasets
            .iter()
            .find(|x| x.domain == d)
            .ok_or_else(|| Error::validation(format!("no dataset for source domain {d}")))?;
        let pool: Vec<usize> = (0..data.len())
            .filter(|&i| classes.is_none_or(|c| c.contains(&data.labels[i])))
            .collect();
        if pool.len() < per {
            return Err(Error::validation(format!(
                "domain {d} has {} eligible images, {per} queries requested",
                pool.len()
            )));
        }
        let mut rng = seed::rng(seed::derive_labeled(seed, "queries", d as u64));
        let rows: Vec<usize> = sample(&mut rng, pool.len(), per).into_iter().map(|k| pool[k]).collect();
        picked.push(data.images.select_rows(&rows));
        tags.extend(std::iter::repeat_n(d, per));
    }
    let refs: Vec<&Tensor> = picked.iter().collect();
    Ok(QuerySet {
        images: Tensor::concat_rows(&refs)?,
        sources: tags,
        seed,
    })
}

/// `[softmax(f(q_1)) | ... | softmax(f(q_N))]` for a `classes`-way model.
pub fn collect_fingerprint(net: &Network, queries: &QuerySet, classes: usize) -> Result<Vec<f64>> {
    let logits = net.infer(&queries.images)?;
    if logits.shape().len() != 2 || logits.shape()[1] != classes {
        return Err(Error::incompatible(format!(
            "model emits {:?} outputs per query, fingerprints expect {classes} classes",
            &logits.shape()[1..]
        )));
    }
    let mut out = Vec::with_capacity(classes * queries.len());
    for r in 0..logits.rows() {
        out.extend(softmax_rows(logits.row(r)));
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite model output"));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fingerprint {
    pub model_id: usize,
    /// `None` for black-box models of unknown origin.
    pub domain: Option<usize>,
    /// Known for white-box models, `None` for black-box targets.
    pub attrs: Option<AttributeVector>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FingerprintSet {
    pub domains: usize,
    pub classes: usize,
    pub queries: usize,
    pub rows: Vec<Fingerprint>,
}

impl FingerprintSet {
    pub fn width(&self) -> usize {
        self.classes * self.queries
    }

    pub fn row(&self, model_id: usize) -> Option<&Fingerprint> {
        self.rows.iter().find(|r| r.model_id == model_id)
    }

    /// Checks lengths and that every C-block is a probability vector.
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            io::check_row(r, self.classes, self.queries, self.domains).map_err(|msg| {
                Error::validation(format!("row {} (model {}): {msg}", i + 1, r.model_id))
            })?;
        }
        Ok(())
    }

    /// Rows as a `[rows, C*N]` tensor, in the order of `ids`.
    pub fn matrix(&self, ids: &[usize]) -> Result<Tensor> {
        let rows: Vec<&[f64]> = ids
            .iter()
            .map(|&id| {
                self.row(id)
                    .map(|r| r.values.as_slice())
                    .ok_or_else(|| Error::validation(format!("no fingerprint for model {id}")))
            })
            .collect::<Result<_>>()?;
        Ok(Tensor::from_rows(&rows)?)
    }
}

/// Fingerprints every usable model of the zoo (records and networks are
/// index-aligned). Parallel across models.
pub fn collect_zoo(zoo: &ModelZoo, networks: &[Network], queries: &QuerySet, classes: usize) -> Result<FingerprintSet> {
    if zoo.records.len() != networks.len() {
        return Err(Error::validation("zoo records and networks differ in length"));
    }
    let jobs: Vec<usize> = (0..networks.len())
        .filter(|&i| zoo.records[i].status == ModelStatus::Ok)
        .collect();
    let values = par::map(&jobs, |&i| collect_fingerprint(&networks[i], queries, classes));
    let rows = jobs
        .iter()
        .zip(values)
        .map(|(&i, v)| {
            let r = &zoo.records[i];
            Ok(Fingerprint {
                model_id: r.id,
                domain: Some(r.domain),
                attrs: Some(r.attrs),
                values: v?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(FingerprintSet {
        domains: zoo.domains,
        classes,
        queries: queries.len(),
        rows,
    })
}

/// Keeps only the probabilities of `subset` classes in every block and
/// renormalizes each block. The full class list in order is the identity.
pub fn restrict_classes(set: &FingerprintSet, subset: &[usize]) -> Result<FingerprintSet> {
    if subset.is_empty() || subset.iter().any(|&c| c >= set.classes) {
        return Err(Error::validation(format!("class subset {subset:?} invalid for C={}", set.classes)));
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != subset.len() {
        return Err(Error::validation("class subset has duplicates"));
    }
    if subset.iter().copied().eq(0..set.classes) {
        return Ok(set.clone());
    }
    let c = set.classes;
    let rows = set
        .rows
        .iter()
        .map(|r| {
            let mut values = Vec::with_capacity(subset.len() * set.queries);
            for block in r.values.chunks(c) {
                let kept: Vec<f64> = subset.iter().map(|&k| block[k]).collect();
                let total: f64 = kept.iter().sum();
                if total > 0.0 {
                    values.extend(kept.iter().map(|v| v / total));
                } else {
                    values.extend(std::iter::repeat_n(1.0 / subset.len() as f64, subset.len()));
                }
            }
            Fingerprint { values, ..r.clone() }
        })
        .collect();
    Ok(FingerprintSet {
        classes: subset.len(),
        rows,
        ..set.clone()
    })
}
