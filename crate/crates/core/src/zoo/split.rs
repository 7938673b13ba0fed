//! Train/val/test partitions of a zoo.

use std::collections::HashMap;

use log::info;
use rand::seq::SliceRandom;

use super::attributes::{AttributeGrid, AttributeVector};
use super::manifest::{ModelStatus, ModelZoo, Split};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
            Split::Unused => 0,
        }
    }

    /// Largest sizes in the exact ratio `ratio` that fit in `available`.
    /// 140 models at 5:1:1 give 100/20/20.
    pub fn from_ratio(available: usize, ratio: [usize; 3]) -> Result<Self> {
        let parts: usize = ratio.iter().sum();
        if parts == 0 || ratio.contains(&0) {
            return Err(Error::validation(format!("split ratio {ratio:?} must be positive")));
        }
        let unit = available / parts;
        if unit == 0 {
            return Err(Error::validation(format!("{available} models cannot be split {ratio:?}")));
        }
        Ok(Self {
            train: unit * ratio[0],
            val: unit * ratio[1],
            test: unit * ratio[2],
        })
    }
}

fn eligible_by_domain(zoo: &ModelZoo) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); zoo.domains];
    for (i, r) in zoo.records.iter().enumerate() {
        if r.status == ModelStatus::Ok {
            out[r.domain].push(i);
        }
    }
    out
}

/// Assigns `sizes` models per domain to train/val/test at random; every
/// other record becomes `Unused`. Models flagged non-finite are never
/// selected.
pub fn split_zoo(zoo: &mut ModelZoo, sizes: SplitSizes, seed: u64) -> Result<()> {
    let eligible = eligible_by_domain(zoo);
    for (d, idx) in eligible.iter().enumerate() {
        if idx.len() < sizes.total() {
            return Err(Error::validation(format!(
                "domain {d} has {} usable models, {} requested",
                idx.len(),
                sizes.total()
            )));
        }
    }
    for r in &mut zoo.records {
        r.split = Split::Unused;
    }
    for (d, mut idx) in eligible.into_iter().enumerate() {
        idx.shuffle(&mut seed::rng(seed::derive_labeled(seed, "split", d as u64)));
        let mut it = idx.into_iter();
        for split in Split::USED {
            for i in it.by_ref().take(sizes.get(split)) {
                zoo.records[i].split = split;
            }
        }
    }
    Ok(())
}

fn check_pigeonhole(grid_len: usize, sizes: SplitSizes) -> Result<()> {
    if sizes.total() > grid_len {
        return Err(Error::validation(format!(
            "{} distinct combinations requested ({}/{}/{}) but the grid has only {grid_len}",
            sizes.total(),
            sizes.train,
            sizes.val,
            sizes.test
        )));
    }
    Ok(())
}

/// Draws three pairwise-disjoint sets of distinct attribute combinations of
/// the requested sizes from `grid`.
pub fn partition_combinations(grid: &AttributeGrid, sizes: SplitSizes, seed: u64) -> Result<[Vec<AttributeVector>; 3]> {
    check_pigeonhole(grid.len(), sizes)?;
    let mut all = grid.enumerate();
    all.shuffle(&mut seed::rng(seed::derive_labeled(seed, "combos", 0)));
    let mut it = all.into_iter();
    Ok(Split::USED.map(|s| it.by_ref().take(sizes.get(s)).collect()))
}

/// Splits the zoo so that no attribute combination occurs in more than one
/// of train/val/test (across all domains). Models are visited in a seeded
/// round-robin over domains; a model whose combination is already owned
/// joins that split while its domain has room there, and an unowned
/// combination goes to the split its domain is furthest from filling.
pub fn disjoint_attribute_split(zoo: &mut ModelZoo, grid: &AttributeGrid, sizes: SplitSizes, seed: u64) -> Result<()> {
    check_pigeonhole(grid.len(), sizes)?;
    let mut eligible = eligible_by_domain(zoo);
    for (d, idx) in eligible.iter_mut().enumerate() {
        idx.shuffle(&mut seed::rng(seed::derive_labeled(seed, "disjoint-domain", d as u64)));
    }
    let longest = eligible.iter().map(Vec::len).max().unwrap_or(0);
    let mut owner: HashMap<AttributeVector, Split> = HashMap::new();
    let mut filled = vec![[0usize; 3]; zoo.domains];
    let mut assignment = Vec::new();
    for k in 0..longest {
        for (d, idx) in eligible.iter().enumerate() {
            let Some(&i) = idx.get(k) else { continue };
            let attrs = zoo.records[i].attrs;
            let room = |s: usize| filled[d][s] < sizes.get(Split::USED[s]);
            let slot = match owner.get(&attrs) {
                Some(&split) => Split::USED.iter().position(|&u| u == split).filter(|&s| room(s)),
                None => (0..3).filter(|&s| room(s)).min_by(|&a, &b| {
                    let frac = |s: usize| filled[d][s] as f64 / sizes.get(Split::USED[s]) as f64;
                    frac(a).total_cmp(&frac(b))
                }),
            };
            if let Some(s) = slot {
                owner.insert(attrs, Split::USED[s]);
                filled[d][s] += 1;
                assignment.push((i, Split::USED[s]));
            }
        }
    }
    for (d, counts) in filled.iter().enumerate() {
        for (s, &split) in Split::USED.iter().enumerate() {
            if counts[s] < sizes.get(split) {
                return Err(Error::validation(format!(
                    "domain {d}: only {} models available for a disjoint {split} split of {}",
                    counts[s],
                    sizes.get(split)
                )));
            }
        }
    }
    for r in &mut zoo.records {
        r.split = Split::Unused;
    }
    for (i, s) in assignment {
        zoo.records[i].split = s;
    }
    info!("disjoint split over {} distinct combinations", owner.len());
    Ok(())
}
