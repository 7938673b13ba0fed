//! Result tables: one row per (method, target, trial), emitted as CSV and as
//! an aligned text table of per-target means.

use std::fmt::Write as _;

use super::metrics::AttributeAccuracy;
use crate::error::{Error, Result};
use crate::zoo::{ATTRIBUTE_NAMES, NUM_ATTRIBUTES, REPORT_ORDER};

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub target: String,
    pub trial: usize,
    pub accuracy: AttributeAccuracy,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

/// Mean and sample standard deviation of one group of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub method: String,
    pub target: String,
    pub trials: usize,
    pub mean: AttributeAccuracy,
    pub std_average: f64,
}

fn report_header() -> Vec<String> {
    REPORT_ORDER.iter().map(|&a| ATTRIBUTE_NAMES[a].to_string()).collect()
}

impl ResultTable {
    pub fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    /// Checks the table invariants: accuracies in [0, 100] and each
    /// average equal to the mean of its nine columns.
    pub fn check(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            let a = &r.accuracy;
            if a.per_attribute.iter().any(|v| !(0.0..=100.0).contains(v)) {
                return Err(Error::validation(format!("row {}: accuracy outside [0, 100]", i + 1)));
            }
            let mean = a.per_attribute.iter().sum::<f64>() / NUM_ATTRIBUTES as f64;
            if (mean - a.average).abs() > 1e-9 {
                return Err(Error::validation(format!(
                    "row {}: average {} differs from column mean {mean}",
                    i + 1,
                    a.average
                )));
            }
        }
        Ok(())
    }

    /// Distinct values of `key` in first-appearance order.
    fn distinct(&self, key: impl Fn(&ResultRow) -> &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.iter().any(|x| x == key(r)) {
                out.push(key(r).to_string());
            }
        }
        out
    }

    pub fn methods(&self) -> Vec<String> {
        self.distinct(|r| &r.method)
    }

    pub fn targets(&self) -> Vec<String> {
        self.distinct(|r| &r.target)
    }

    fn summarize(&self, method: &str, target: Option<&str>) -> Option<Summary> {
        let group: Vec<&ResultRow> = self
            .rows
            .iter()
            .filter(|r| r.method == method && target.is_none_or(|t| r.target == t))
            .collect();
        if group.is_empty() {
            return None;
        }
        let accs: Vec<AttributeAccuracy> = group.iter().map(|r| r.accuracy.clone()).collect();
        let mean = AttributeAccuracy::mean(&accs).ok()?;
        let n = accs.len() as f64;
        let var = if accs.len() > 1 {
            accs.iter().map(|a| (a.average - mean.average).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(Summary {
            method: method.to_string(),
            target: target.unwrap_or("all").to_string(),
            trials: accs.len(),
            mean,
            std_average: var.sqrt(),
        })
    }

    /// Per (target, method) means in first-appearance order.
    pub fn summaries(&self) -> Vec<Summary> {
        let mut out = Vec::new();
        for t in self.targets() {
            for m in self.methods() {
                out.extend(self.summarize(&m, Some(&t)));
            }
        }
        out
    }

    /// Mean over every row of `method`, across targets and trials.
    pub fn overall(&self, method: &str) -> Option<Summary> {
        self.summarize(method, None)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("method,target,trial,{},avg\n", report_header().join(","));
        for r in &self.rows {
            let _ = write!(s, "{},{},{}", r.method, r.target, r.trial);
            for v in r.accuracy.report_order() {
                let _ = write!(s, ",{v:.4}");
            }
            let _ = writeln!(s, ",{:.4}", r.accuracy.average);
        }
        s
    }

    /// Aligned table of per-target means (two decimals) with a final block
    /// of means over all targets.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut head = format!("{:<10} {:<8}", "target", "method");
        for h in report_header() {
            let _ = write!(head, " {h:>6}");
        }
        let _ = write!(head, " {:>6} {:>5}", "avg", "std");
        let _ = writeln!(s, "{head}");
        let _ = writeln!(s, "{}", "-".repeat(head.len()));
        let overall: Vec<Summary> = self.methods().iter().filter_map(|m| self.overall(m)).collect();
        for sm in self.summaries().iter().chain(&overall) {
            let _ = write!(s, "{:<10} {:<8}", sm.target, sm.method);
            for v in sm.mean.report_order() {
                let _ = write!(s, " {v:>6.2}");
            }
            let _ = writeln!(s, " {:>6.2} {:>5.2}", sm.mean.average, sm.std_average);
        }
        s
    }
}
