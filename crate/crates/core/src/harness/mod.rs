//! Evaluation protocols, result tables, sweeps and probes.

mod export;
mod lodo;
mod metrics;
mod probe;
mod sweep;
mod table;

pub use export::{export_embeddings, write_embeddings};
pub use lodo::{
    audit_rows, evaluate, rotation_fingerprints, rotation_ids, run_domain_shift, run_lodo, shared_combinations, train_method, trial_seed,
    Experiment, ExperimentPlan, LodoRun, Method, MethodSettings, Rotation, ShiftMode, TrainedMethod,
};
pub use metrics::{normalized_accuracy, per_attribute_accuracy, random_row, AttributeAccuracy};
pub use probe::{domain_probe, ProbeConfig, ProbeResult};
pub use sweep::{sweep, sweep_csv, SweepAxis, SweepPoint};
pub use table::{ResultRow, ResultTable, Summary};
