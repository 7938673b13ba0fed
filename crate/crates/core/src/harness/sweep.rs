//! One-parameter sweeps over the LODO protocol.

use std::fmt::Write as _;

use super::lodo::{run_lodo, Experiment, ExperimentPlan, LodoRun, MethodSettings};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Lambda,
    QueryCount,
    /// Training models per source domain.
    ZooSize,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::QueryCount => "query_count",
            SweepAxis::ZooSize => "zoo_size",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepAxis::Lambda, SweepAxis::QueryCount, SweepAxis::ZooSize]
            .into_iter()
            .find(|a| a.name() == s || a.name().replace('_', "-") == s)
            .ok_or_else(|| Error::validation(format!("unknown sweep axis `{s}`")))
    }
}

pub struct SweepPoint {
    pub value: f64,
    pub run: LodoRun,
}

fn as_count(axis: SweepAxis, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::validation(format!("{} must be a positive integer, got {v}", axis.name())))
    }
}

/// One full evaluation per value with the plan's seeds shared across
/// values.
pub fn sweep(
    exp: &Experiment,
    plan: &ExperimentPlan,
    settings: &MethodSettings,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::validation("no sweep values"));
    }
    for &v in values {
        match axis {
            SweepAxis::Lambda if !(v.is_finite() && v >= 0.0) => {
                return Err(Error::validation(format!("lambda must be finite and >= 0, got {v}")))
            }
            SweepAxis::QueryCount | SweepAxis::ZooSize => {
                as_count(axis, v)?;
            }
            _ => {}
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for &value in values {
        let mut plan = plan.clone();
        let mut settings = settings.clone();
        match axis {
            SweepAxis::Lambda => {
                settings.dream.lambda = value;
                settings.dream.tune_lambda = false;
            }
            SweepAxis::QueryCount => plan.queries = as_count(axis, value)?,
            SweepAxis::ZooSize => plan.train_limit = Some(as_count(axis, value)?),
        }
        out.push(SweepPoint {
            value,
            run: run_lodo(exp, &plan, &settings)?,
        });
    }
    Ok(out)
}

/// Long-format CSV: the axis value prepended to every table row.
pub fn sweep_csv(axis: SweepAxis, points: &[SweepPoint]) -> String {
    let mut s = String::new();
    for (k, p) in points.iter().enumerate() {
        for (i, line) in p.run.table.to_csv().lines().enumerate() {
            if i == 0 {
                if k == 0 {
                    let _ = writeln!(s, "{},{line}", axis.name());
                }
            } else {
                let _ = writeln!(s, "{},{line}", p.value);
            }
        }
    }
    s
}
