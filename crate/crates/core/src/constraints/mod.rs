//! The scene-constraint language: program types, parser, canonical
//! serialization and evaluation against a scene.

pub mod eval;
pub mod parse;
pub mod program;
pub mod relations;

pub use eval::{evaluate_constraints, evaluate_score, OccupancyMode, Outcome, SatisfactionReport, Violation};
pub use parse::{parse_program, ParseError};
pub use program::{
    AssetOverride, ConstraintProgram, CountConstraint, Objective, RelationConstraint, ScoreTerm, SemanticSelector, Target,
};
