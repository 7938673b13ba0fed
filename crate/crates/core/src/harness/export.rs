//! Plain-text export of generator embeddings.

use std::fmt::Write as _;
use std::path::Path;

use crate::dream::Pipeline;
use crate::error::{Error, Result};
use crate::fingerprint::FingerprintSet;

/// One line per fingerprint: `model_id,domain,z_1,...,z_d` with shortest
/// round-trip floats; the domain is `?` when unknown.
pub fn export_embeddings(pipeline: &Pipeline, set: &FingerprintSet, grid_hash: u64) -> Result<String> {
    pipeline.check_compatible(set, grid_hash)?;
    if pipeline.generator.is_none() {
        return Err(Error::validation(format!("a {} pipeline has no generator embeddings", pipeline.kind)));
    }
    let ids: Vec<usize> = set.rows.iter().map(|r| r.model_id).collect();
    let z = pipeline.embed(&set.matrix(&ids)?)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "model_id,domain,{}",
        (0..z.row_len()).map(|j| format!("z{j}")).collect::<Vec<_>>().join(",")
    );
    for (i, r) in set.rows.iter().enumerate() {
        let _ = write!(s, "{},", r.model_id);
        match r.domain {
            Some(d) => {
                let _ = write!(s, "{d}");
            }
            None => s.push('?'),
        }
        for v in z.row(i) {
            let _ = write!(s, ",{v:?}");
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn write_embeddings(path: &Path, pipeline: &Pipeline, set: &FingerprintSet, grid_hash: u64) -> Result<()> {
    let text = export_embeddings(pipeline, set, grid_hash)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
