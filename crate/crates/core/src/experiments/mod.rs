//! Desk-scale experiment pipelines: disk classification with the
//! first-order and momentum models, curve tracking with the memory
//! model, and the decision-boundary topology probe.

mod datasets;
mod disk;
mod metrics;
mod topology;
mod tracking_exp;

pub use datasets::{DiskDataset, MKind, TrackingDataset};
pub use disk::{run_disk_experiment, DiskConfig, DiskReport, DiskSeedRun};
pub use metrics::{
    classifier_grid, l1_generalization_error, marching_squares, ClassifierGrid, CLASS_THRESHOLD,
};
pub use topology::{boundary_topology_probe, BoundaryTopology};
pub use tracking_exp::{
    run_tracking_experiment, TrackingConfig, TrackingReport, TrackingSeedRun,
};
