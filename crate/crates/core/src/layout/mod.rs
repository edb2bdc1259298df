//! Scene construction by simulated annealing over movable clusters.

pub mod actions;
pub mod cluster;
pub mod optimize;
pub mod placement;
pub mod schedule;

pub use actions::{apply_action, check_feasible, Action, ActionKind, CheckMode, Outcome, RevertReason};
pub use cluster::{identify_clusters, Cluster};
pub use optimize::{
    optimize_layout, optimize_layout_hierarchical, optimize_layout_observed, LayoutMode, LayoutResult, OptimizeStats, StepRecord,
    StepResult,
};
pub use placement::Placement;
pub use schedule::OptimizerSchedule;

use crate::catalog::AssetCatalog;
use crate::constraints::ConstraintProgram;
use crate::scene::InstanceId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LayoutError {
    #[error("unknown instance {0}")]
    UnknownTarget(InstanceId),
    #[error("unknown asset category {0}")]
    UnknownCategory(String),
    #[error("{category}: dimension {value} on axis {axis} is outside the allowed range")]
    DimsOutOfRange { category: String, axis: usize, value: f64 },
    #[error("{0} has children; move it with a cluster action")]
    HasChildren(InstanceId),
    #[error("{0} is not a cluster root")]
    NotAClusterRoot(InstanceId),
    #[error("relation graph has a cycle through {0}")]
    CyclicRelations(InstanceId),
    #[error("illegal action: {0}")]
    IllegalAction(&'static str),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid room: {0}")]
    InvalidRoom(String),
}

/// The catalog with the program's per-axis dimension overrides applied.
pub fn effective_catalog(program: &ConstraintProgram, catalog: &AssetCatalog) -> AssetCatalog {
    let mut out = catalog.clone();
    for (cat, ov) in &program.asset_overrides {
        if let Some(e) = out.entries.get_mut(cat) {
            for axis in 0..3 {
                if let Some(r) = ov.axis(axis) {
                    e.dimension_ranges[axis] = r;
                }
            }
        }
    }
    out
}
