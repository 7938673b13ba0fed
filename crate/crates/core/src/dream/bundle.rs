//! Binary bundle of a trained pipeline.
//!
//! Little-endian: magic, kind (u8), C, N, m (u32), grid hash (u64), lambda
//! (f64), generator flag (u8), discriminator count (u32), trunk flag (u8),
//! then each network as an nnkernel checkpoint in that order.

use std::io::{Read, Write};
use std::path::Path;

use nnkernel::{read_network, write_network};

use super::{FingerprintMeta, Pipeline, PipelineKind};
use crate::error::{Error, Result};

pub const PIPELINE_MAGIC: &[u8; 8] = b"DRMPIPE1";

pub fn encode_pipeline(p: &Pipeline) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(PIPELINE_MAGIC);
    buf.push(p.kind.code());
    for v in [p.meta.classes, p.meta.queries, p.meta.domains] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    buf.extend_from_slice(&p.meta.grid_hash.to_le_bytes());
    buf.extend_from_slice(&p.lambda.to_le_bytes());
    buf.push(p.generator.is_some() as u8);
    buf.extend_from_slice(&(p.discriminators.len() as u32).to_le_bytes());
    buf.push(p.trunk.is_some() as u8);
    for n in p.generator.iter().chain(&p.discriminators).chain(&p.trunk) {
        write_network(&mut buf, n)?;
    }
    write_network(&mut buf, &p.head)?;
    Ok(buf)
}

pub fn write_pipeline(path: &Path, p: &Pipeline) -> Result<()> {
    let bytes = encode_pipeline(p)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> std::result::Result<&'a [u8], String> {
    if bytes.len() < n {
        return Err("truncated header".into());
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

fn u32_of(bytes: &mut &[u8]) -> std::result::Result<usize, String> {
    Ok(u32::from_le_bytes(take(bytes, 4)?.try_into().expect("4 bytes")) as usize)
}

pub fn decode_pipeline(mut bytes: &[u8]) -> std::result::Result<Pipeline, String> {
    let cur = &mut bytes;
    if take(cur, 8)? != PIPELINE_MAGIC {
        return Err("not a pipeline bundle".into());
    }
    let kind = PipelineKind::from_code(take(cur, 1)?[0]).ok_or("unknown pipeline kind")?;
    let classes = u32_of(cur)?;
    let queries = u32_of(cur)?;
    let domains = u32_of(cur)?;
    let grid_hash = u64::from_le_bytes(take(cur, 8)?.try_into().expect("8 bytes"));
    let lambda = f64::from_le_bytes(take(cur, 8)?.try_into().expect("8 bytes"));
    let has_gen = take(cur, 1)?[0] == 1;
    let n_disc = u32_of(cur)?;
    let has_trunk = take(cur, 1)?[0] == 1;
    if n_disc > 64 {
        return Err(format!("implausible discriminator count {n_disc}"));
    }
    let mut next = |what: &str| read_network(cur).map_err(|e| format!("{what}: {e}"));
    let generator = if has_gen { Some(next("generator")?) } else { None };
    let discriminators = (0..n_disc)
        .map(|i| next(&format!("discriminator {i}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let trunk = if has_trunk { Some(next("trunk")?) } else { None };
    let head = next("head")?;
    if !cur.is_empty() {
        return Err("trailing bytes".into());
    }
    Ok(Pipeline {
        kind,
        meta: FingerprintMeta {
            classes,
            queries,
            domains,
            grid_hash,
        },
        lambda,
        generator,
        discriminators,
        trunk,
        head,
    })
}

pub fn read_pipeline(path: &Path) -> Result<Pipeline> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_pipeline(&bytes).map_err(|msg| Error::Format {
        file: path.display().to_string(),
        line: 0,
        msg,
    })
}
