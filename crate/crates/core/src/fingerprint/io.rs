//! Fingerprint interchange format.
//!
//! ```text
//! DREAMFP 1 m=3 C=5 N=100
//! 17,0,relu,yes,no,yes,3,2,4,adam,64,0.01,0.9,...
//! 4,unknown,?,?,?,?,?,?,?,?,?,0.2,0.2,...
//! ```
//!
//! Floats use the shortest decimal form that parses back to the same
//! 64-bit value, so write/read is bit-exact. A single `?` may stand in for
//! all nine attribute tokens.

use std::path::Path;

use super::{Fingerprint, FingerprintSet};
use crate::error::{Error, Result};
use crate::zoo::{AttributeVector, NUM_ATTRIBUTES};

/// Allowed deviation of a block sum from 1.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

pub(super) fn check_row(r: &Fingerprint, classes: usize, queries: usize, domains: usize) -> std::result::Result<(), String> {
    if r.values.len() != classes * queries {
        return Err(format!("expected {} values, got {}", classes * queries, r.values.len()));
    }
    if let Some(d) = r.domain {
        if d >= domains {
            return Err(format!("domain {d} out of range for m={domains}"));
        }
    }
    for (b, block) in r.values.chunks(classes).enumerate() {
        if let Some(v) = block.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(format!("block {} has entry {v} outside [0, 1]", b + 1));
        }
        let sum: f64 = block.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(format!("block {} sums to {sum}, not 1", b + 1));
        }
    }
    Ok(())
}

pub fn format_fingerprints(set: &FingerprintSet) -> String {
    let mut out = format!("DREAMFP 1 m={} C={} N={}\n", set.domains, set.classes, set.queries);
    for r in &set.rows {
        out.push_str(&r.model_id.to_string());
        out.push(',');
        match r.domain {
            Some(d) => out.push_str(&d.to_string()),
            None => out.push_str("unknown"),
        }
        match &r.attrs {
            Some(a) => {
                for t in a.tokens() {
                    out.push(',');
                    out.push_str(&t);
                }
            }
            None => out.push_str(&",?".repeat(NUM_ATTRIBUTES)),
        }
        for v in &r.values {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_fingerprints(path: &Path, set: &FingerprintSet) -> Result<()> {
    set.validate()?;
    std::fs::write(path, format_fingerprints(set)).map_err(|e| Error::io(path, e))
}

pub fn read_fingerprints(path: &Path) -> Result<FingerprintSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fingerprints(&text, &path.display().to_string())
}

fn header_value(tokens: &[&str], key: &str) -> Option<usize> {
    tokens
        .iter()
        .find_map(|t| t.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .and_then(|v| v.parse().ok())
}

pub fn parse_fingerprints(text: &str, file: &str) -> Result<FingerprintSet> {
    let err = |line: usize, msg: String| Error::Format {
        file: file.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split_whitespace().collect();
    if header.len() != 5 || header[0] != "DREAMFP" || header[1] != "1" {
        return Err(err(1, "expected header `DREAMFP 1 m=<m> C=<C> N=<N>`".into()));
    }
    let (domains, classes, queries) = match (
        header_value(&header, "m"),
        header_value(&header, "C"),
        header_value(&header, "N"),
    ) {
        (Some(m), Some(c), Some(n)) if m >= 1 && c >= 2 && n >= 1 => (m, c, n),
        _ => return Err(err(1, "bad m, C or N in header".into())),
    };
    let width = classes * queries;
    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in lines.enumerate() {
        let ln = i + 2;
        let row_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let attr_cols = if f.len() == 3 + width && f[2] == "?" {
            1
        } else if f.len() == 2 + NUM_ATTRIBUTES + width {
            NUM_ATTRIBUTES
        } else {
            return Err(err(
                ln,
                format!("row {row_no}: expected {width} values (C*N), found {}", f.len().saturating_sub(2 + NUM_ATTRIBUTES)),
            ));
        };
        let model_id: usize = f[0]
            .parse()
            .map_err(|_| err(ln, format!("row {row_no}: bad model id `{}`", f[0])))?;
        if !seen.insert(model_id) {
            return Err(err(ln, format!("row {row_no}: duplicate model id {model_id}")));
        }
        let domain = match f[1] {
            "unknown" => None,
            d => Some(d.parse().map_err(|_| err(ln, format!("row {row_no}: bad domain `{d}`")))?),
        };
        let tokens = &f[2..2 + attr_cols];
        let attrs = if tokens.iter().all(|t| *t == "?") {
            None
        } else {
            Some(AttributeVector::parse_tokens(tokens).map_err(|e| err(ln, format!("row {row_no}: {e}")))?)
        };
        let values = f[2 + attr_cols..]
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| err(ln, format!("row {row_no}: {e}")))?;
        let fp = Fingerprint {
            model_id,
            domain,
            attrs,
            values,
        };
        check_row(&fp, classes, queries, domains).map_err(|m| err(ln, format!("row {row_no}: {m}")))?;
        rows.push(fp);
    }
    Ok(FingerprintSet {
        domains,
        classes,
        queries,
        rows,
    })
}
