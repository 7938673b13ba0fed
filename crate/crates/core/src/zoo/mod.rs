//! White-box model zoo: attribute grid, architectures, synthetic domains,
//! training and splits.

mod arch;
mod attributes;
mod data;
mod manifest;
mod split;
mod train;

pub use arch::{build_model, ArchWidths};
pub use attributes::{
    format_grid_hash, head_offsets, AttributeGrid, AttributeVector, ATTRIBUTE_NAMES, BATCH_SIZES, HEAD_SIZES,
    KERNEL_SIZES, LAYER_COUNTS, NUM_ATTRIBUTES, REPORT_ORDER, TOTAL_HEAD_OUTPUTS,
};
pub use data::{class_prototypes, gen_synthetic_domains, read_domain, write_domain, DomainData, DomainSpec, DomainStyle};
pub use manifest::{
    format_manifest, parse_manifest, read_manifest, write_manifest, ModelRecord, ModelStatus, ModelZoo, Split,
    MANIFEST_COLUMNS,
};
pub use split::{disjoint_attribute_split, partition_combinations, split_zoo, SplitSizes};
pub use train::{
    accuracy, argmax, buildable, checkpoint_bytes, checkpoint_name, load_network, load_networks, plan_zoo,
    save_checkpoints, train_model, train_zoo, PlannedModel, TrainSettings, TrainedModel, TrainedZoo, ZooPlan,
};
