//! Constraint-driven room layout synthesis, camera path planning and spatial QA generation.

pub mod catalog;
pub mod constraints;
pub mod diagnostics;
pub mod geometry;
pub mod layout;
pub mod par;
pub mod planner;
pub mod refine;
pub mod scene;
pub mod synth;
pub mod taskgen;

pub use catalog::AssetCatalog;
pub use constraints::{parse_program, ConstraintProgram};
pub use layout::{optimize_layout, optimize_layout_hierarchical, OptimizerSchedule};
pub use scene::SceneState;
pub use synth::ComplexityControls;
