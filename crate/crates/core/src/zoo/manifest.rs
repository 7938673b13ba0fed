//! Model records and the line-oriented zoo manifest.
//!
//! ```text
//! # DREAMZOO 1 grid=<16 hex digits> seed=<u64> domains=<m>
//! id,domain,act,drop,pool,bn,ks,conv,fc,opt,bs,seed,val_acc,split,status,checkpoint
//! 0,0,relu,yes,no,...,64,1234,0.83,train,ok,models/model_0.ckpt
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::attributes::{format_grid_hash, AttributeVector, NUM_ATTRIBUTES};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
    Unused,
}

impl Split {
    pub const USED: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unused => "unused",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "unused" => Ok(Split::Unused),
            _ => Err(Error::validation(format!("unknown split `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelStatus {
    Ok,
    /// Training hit a non-finite loss or gradient; the record is kept but
    /// excluded from splits.
    NonFinite,
}

impl ModelStatus {
    pub fn name(self) -> &'static str {
        match self {
            ModelStatus::Ok => "ok",
            ModelStatus::NonFinite => "nonfinite",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelRecord {
    pub id: usize,
    pub domain: usize,
    pub attrs: AttributeVector,
    pub seed: u64,
    pub val_acc: f64,
    pub split: Split,
    pub status: ModelStatus,
    /// Relative to the manifest's directory; `None` if never saved.
    pub checkpoint: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelZoo {
    pub records: Vec<ModelRecord>,
    pub domains: usize,
    pub grid_hash: u64,
    pub seed: u64,
}

impl ModelZoo {
    pub fn records_in(&self, domain: usize, split: Split) -> impl Iterator<Item = &ModelRecord> {
        self.records
            .iter()
            .filter(move |r| r.domain == domain && r.split == split)
    }

    pub fn count(&self, domain: usize, split: Split) -> usize {
        self.records_in(domain, split).count()
    }

    pub fn record(&self, id: usize) -> Option<&ModelRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

pub const MANIFEST_COLUMNS: &str =
    "id,domain,act,drop,pool,bn,ks,conv,fc,opt,bs,seed,val_acc,split,status,checkpoint";

pub fn format_manifest(zoo: &ModelZoo) -> String {
    let mut out = format!(
        "# DREAMZOO 1 grid={} seed={} domains={}\n{MANIFEST_COLUMNS}\n",
        format_grid_hash(zoo.grid_hash),
        zoo.seed,
        zoo.domains
    );
    for r in &zoo.records {
        let ckpt = r
            .checkpoint
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.id,
            r.domain,
            r.attrs.tokens().join(","),
            r.seed,
            r.val_acc,
            r.split,
            r.status.name(),
            ckpt
        ));
    }
    out
}

pub fn write_manifest(path: &Path, zoo: &ModelZoo) -> Result<()> {
    std::fs::write(path, format_manifest(zoo)).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<ModelZoo> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, &path.display().to_string())
}

fn header_field<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    header
        .split_whitespace()
        .find_map(|t| t.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
}

pub fn parse_manifest(text: &str, file: &str) -> Result<ModelZoo> {
    let err = |line: usize, msg: String| Error::Format {
        file: file.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with("# DREAMZOO 1") {
        return Err(err(1, "missing `# DREAMZOO 1` header".into()));
    }
    let grid_hash = header_field(header, "grid")
        .and_then(|v| u64::from_str_radix(v, 16).ok())
        .ok_or_else(|| err(1, "bad or missing grid hash".into()))?;
    let seed = header_field(header, "seed")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(1, "bad or missing seed".into()))?;
    let domains: usize = header_field(header, "domains")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(1, "bad or missing domain count".into()))?;
    if domains < 2 {
        return Err(err(1, format!("need at least 2 domains, got {domains}")));
    }
    if lines.next() != Some(MANIFEST_COLUMNS) {
        return Err(err(2, "unexpected column line".into()));
    }
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in lines.enumerate() {
        let ln = i + 3;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 + NUM_ATTRIBUTES {
            return Err(err(ln, format!("expected {} fields, got {}", 7 + NUM_ATTRIBUTES, f.len())));
        }
        let id: usize = f[0].parse().map_err(|_| err(ln, format!("bad id `{}`", f[0])))?;
        if !seen.insert(id) {
            return Err(err(ln, format!("duplicate model id {id}")));
        }
        let domain: usize = f[1].parse().map_err(|_| err(ln, format!("bad domain `{}`", f[1])))?;
        if domain >= domains {
            return Err(err(ln, format!("domain {domain} out of range")));
        }
        let attrs = AttributeVector::parse_tokens(&f[2..2 + NUM_ATTRIBUTES]).map_err(|e| err(ln, e.to_string()))?;
        let rest = &f[2 + NUM_ATTRIBUTES..];
        let seed: u64 = rest[0].parse().map_err(|_| err(ln, format!("bad seed `{}`", rest[0])))?;
        let val_acc: f64 = rest[1]
            .parse()
            .ok()
            .filter(|v: &f64| (0.0..=1.0).contains(v))
            .ok_or_else(|| err(ln, format!("validation accuracy `{}` not in [0, 1]", rest[1])))?;
        let split = rest[2].parse().map_err(|e: Error| err(ln, e.to_string()))?;
        let status = match rest[3] {
            "ok" => ModelStatus::Ok,
            "nonfinite" => ModelStatus::NonFinite,
            s => return Err(err(ln, format!("unknown status `{s}`"))),
        };
        let checkpoint = match rest[4] {
            "-" => None,
            p => Some(PathBuf::from(p)),
        };
        records.push(ModelRecord {
            id,
            domain,
            attrs,
            seed,
            val_acc,
            split,
            status,
            checkpoint,
        });
    }
    Ok(ModelZoo {
        records,
        domains,
        grid_hash,
        seed,
    })
}
