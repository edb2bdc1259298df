//! Optimize, diagnose, revise the program, repeat.

pub mod external;
pub mod rules;

pub use external::{Endpoint, ExternalRefiner};
pub use rules::rule_based_refine;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::AssetCatalog;
use crate::constraints::ConstraintProgram;
use crate::diagnostics::{build_error_report, ErrorReport, SceneMetrics};
use crate::layout::{optimize_layout_observed, LayoutError, LayoutMode, OptimizerSchedule};
use crate::scene::SceneState;

pub const HISTORY_SCHEMA: &str = "history/1";
pub const DEFAULT_BUDGET: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum RefineOutcome {
    Revised { program: ConstraintProgram, actions: Vec<String> },
    NoChange,
    /// Transport or format failure; treated as no change.
    Fault(String),
}

pub trait Refiner {
    fn refine(&mut self, program: &ConstraintProgram, report: &ErrorReport, iteration: usize) -> RefineOutcome;
}

pub struct RuleBasedRefiner {
    pub catalog: AssetCatalog,
}

impl RuleBasedRefiner {
    pub fn new(catalog: AssetCatalog) -> Self {
        Self { catalog }
    }
}

impl Refiner for RuleBasedRefiner {
    fn refine(&mut self, program: &ConstraintProgram, report: &ErrorReport, _iteration: usize) -> RefineOutcome {
        match rule_based_refine(program, report, &self.catalog) {
            Some((p, a)) => RefineOutcome::Revised { program: p, actions: vec![format!("rule {}: {}", a.rule, a.description)] },
            None => RefineOutcome::NoChange,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinerRecord {
    /// `revised`, `no_change` or `fault`.
    pub outcome: String,
    #[serde(default)]
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub index: usize,
    pub seed: u64,
    pub program: String,
    pub metrics: SceneMetrics,
    pub violated: Vec<String>,
    /// SHA-256 of the iteration's `report/1` JSON.
    pub report_digest: String,
    /// Absent on the final iteration, when the refiner is not consulted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refiner: Option<RefinerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementHistory {
    pub schema: String,
    pub iterations: Vec<Iteration>,
    pub converged: bool,
    pub iterations_used: usize,
}

impl RefinementHistory {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("history serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub struct RefinementResult {
    pub scene: SceneState,
    pub program: ConstraintProgram,
    pub report: ErrorReport,
    pub history: RefinementHistory,
}

pub fn report_digest(report: &ErrorReport) -> String {
    hex::encode(Sha256::digest(report.to_json().as_bytes()))
}

/// Runs up to `budget` optimize/diagnose rounds; iteration `i` uses seed
/// `schedule.rng_seed + i`. Stops early once fidelity is 1 with no artifacts.
pub fn run_refinement(
    program: &ConstraintProgram,
    catalog: &AssetCatalog,
    refiner: &mut dyn Refiner,
    budget: usize,
    schedule: &OptimizerSchedule,
    mode: LayoutMode,
) -> Result<RefinementResult, LayoutError> {
    let budget = budget.max(1);
    let mut current = program.clone();
    let mut iterations = Vec::new();
    let mut converged = false;
    let mut last = None;
    for i in 0..budget {
        let seed = schedule.rng_seed.wrapping_add(i as u64);
        let sched = OptimizerSchedule { rng_seed: seed, ..schedule.clone() };
        let result = optimize_layout_observed(&current, catalog, &sched, mode, |_| {})?;
        let report = build_error_report(&current, &result.scene);
        converged = report.metrics.converged();
        let mut it = Iteration {
            index: i,
            seed,
            program: current.to_dsl(),
            metrics: report.metrics.clone(),
            violated: report.textual_summary.clone(),
            report_digest: report_digest(&report),
            refiner: None,
        };
        let mut next = None;
        if !converged && i + 1 < budget {
            it.refiner = Some(match refiner.refine(&current, &report, i) {
                RefineOutcome::Revised { program, actions } => {
                    next = Some(program);
                    RefinerRecord { outcome: "revised".into(), actions, fault: None }
                }
                RefineOutcome::NoChange => RefinerRecord { outcome: "no_change".into(), actions: Vec::new(), fault: None },
                RefineOutcome::Fault(f) => RefinerRecord { outcome: "fault".into(), actions: Vec::new(), fault: Some(f) },
            });
        }
        iterations.push(it);
        let program_used = match next {
            Some(p) => std::mem::replace(&mut current, p),
            None => current.clone(),
        };
        last = Some((result.scene, program_used, report));
        if converged {
            break;
        }
    }
    let (scene, program, report) = last.expect("budget is at least one");
    let history = RefinementHistory { schema: HISTORY_SCHEMA.into(), iterations_used: iterations.len(), iterations, converged };
    Ok(RefinementResult { scene, program, report, history })
}
