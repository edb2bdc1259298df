//! Constraint satisfaction and score evaluation over a scene.

use serde::{Deserialize, Serialize};

use super::program::{count_id, relation_id, ConstraintProgram, Objective, SemanticSelector, Target, OCCUPANCY_ID};
use super::relations::{nearest_wall, relation_holds};
use crate::diagnostics;
use crate::geometry::grid::DEFAULT_BEV_RESOLUTION;
use crate::geometry::normalize_angle;
use crate::scene::{ObjectInstance, RelationTarget, SceneState};

/// How occupancy is measured while evaluating `occupancy in [a,b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OccupancyMode {
    /// Footprint union on a BEV grid of the given resolution.
    Grid(f64),
    /// Sum of floor-standing footprint areas; cheap, used inside the optimizer.
    FootprintSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintRef {
    Count(usize),
    Relation(usize),
    Occupancy,
}

impl ConstraintRef {
    pub fn id(&self) -> String {
        match self {
            ConstraintRef::Count(i) => count_id(*i),
            ConstraintRef::Relation(i) => relation_id(*i),
            ConstraintRef::Occupancy => OCCUPANCY_ID.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub which: ConstraintRef,
    pub observed: f64,
    pub required: (f64, f64),
    /// Zero iff satisfied; otherwise grows with the distance from the requirement.
    pub penalty: f64,
}

impl Outcome {
    pub fn satisfied(&self) -> bool {
        self.penalty == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub id: String,
    pub observed: f64,
    pub required: [f64; 2],
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionReport {
    pub satisfied: Vec<String>,
    pub violated: Vec<Violation>,
    pub score: f64,
}

impl SatisfactionReport {
    pub fn all_satisfied(&self) -> bool {
        self.violated.is_empty()
    }
}

/// Penalty weight for one unit of occupancy-ratio error relative to one missing object.
const OCCUPANCY_PENALTY_SCALE: f64 = 20.0;

/// Per-scene cache of which declared relations hold.
pub struct EvalContext<'a> {
    pub scene: &'a SceneState,
    holds: Vec<bool>,
}

impl<'a> EvalContext<'a> {
    pub fn new(scene: &'a SceneState) -> Self {
        let holds = scene.instances.iter().map(|i| relation_holds(scene, i)).collect();
        Self { scene, holds }
    }

    pub fn holds(&self, i: usize) -> bool {
        self.holds[i]
    }

    pub fn matches_base(&self, inst: &ObjectInstance, sel: &SemanticSelector) -> bool {
        if let Some(c) = &sel.category {
            if c != &inst.category {
                return false;
            }
        }
        if sel.tags.is_empty() {
            return true;
        }
        match self.scene.tags_of(&inst.category) {
            Some(tags) => sel.tags.is_subset(tags),
            None => false,
        }
    }

    /// Full selector match, including the relation filter (declared and geometrically valid).
    pub fn matches(&self, i: usize, sel: &SemanticSelector) -> bool {
        let inst = &self.scene.instances[i];
        if !self.matches_base(inst, sel) {
            return false;
        }
        let Some(rel) = sel.related_to.as_deref() else { return true };
        let Some(decl) = &inst.relation else { return false };
        if decl.kind != rel.0 || !self.holds[i] {
            return false;
        }
        match (&rel.1, &decl.target) {
            (Target::Wall, RelationTarget::Wall(_)) => true,
            (Target::Objects(p), RelationTarget::Instance(pid)) => {
                self.scene.index_of(pid).is_some_and(|pi| self.matches(pi, p))
            }
            _ => false,
        }
    }

    pub fn matching(&self, sel: &SemanticSelector) -> Vec<usize> {
        (0..self.scene.instances.len()).filter(|&i| self.matches(i, sel)).collect()
    }

    pub fn matching_target(&self, t: &Target) -> Vec<usize> {
        match t {
            Target::Wall => Vec::new(),
            Target::Objects(s) => self.matching(s),
        }
    }
}

fn range_distance(v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo {
        lo - v
    } else if v > hi {
        v - hi
    } else {
        0.0
    }
}

/// Observed count for a count constraint plus its total penalty.
///
/// Scoped constraints are checked per parent: the penalty sums over parents and
/// the reported observation is the parent count farthest outside the range. With
/// no parent at all the observation is 0, so positive lower bounds stay violated.
fn count_outcome(ctx: &EvalContext<'_>, program: &ConstraintProgram, i: usize) -> Outcome {
    let c = &program.counts[i];
    let (lo, hi) = (c.low as f64, c.high as f64);
    let matched = ctx.matching(&c.selector);
    let (observed, penalty) = match &c.scope {
        None => {
            let n = matched.len() as f64;
            (n, range_distance(n, lo, hi))
        }
        Some(parent_sel) => {
            let parents = ctx.matching(parent_sel);
            let mut total = 0.0;
            let mut worst: Option<(f64, f64)> = None;
            for p in parents {
                let pid = &ctx.scene.instances[p].id;
                let n = matched.iter().filter(|&&m| ctx.scene.instances[m].parent() == Some(pid)).count() as f64;
                let d = range_distance(n, lo, hi);
                total += d;
                if worst.is_none_or(|(_, wd)| d > wd) {
                    worst = Some((n, d));
                }
            }
            match worst {
                Some((n, _)) => (n, total),
                None => (0.0, range_distance(0.0, lo, hi)),
            }
        }
    };
    Outcome { which: ConstraintRef::Count(i), observed, required: (lo, hi), penalty }
}

fn relation_outcome(ctx: &EvalContext<'_>, program: &ConstraintProgram, i: usize) -> Outcome {
    let r = &program.relations[i];
    let with_rel = r.child.base().with_relation(r.kind, r.parent.clone());
    let violators = ctx
        .matching(&r.child.base())
        .into_iter()
        .filter(|&k| !ctx.matches(k, &with_rel))
        .count() as f64;
    Outcome { which: ConstraintRef::Relation(i), observed: violators, required: (0.0, 0.0), penalty: violators }
}

pub fn measure_occupancy(scene: &SceneState, mode: OccupancyMode) -> f64 {
    match mode {
        OccupancyMode::Grid(res) => diagnostics::occupancy_ratio_at(scene, res),
        OccupancyMode::FootprintSum => diagnostics::footprint_sum_ratio(scene),
    }
}

/// Per-constraint outcomes in report order: counts, relations, occupancy.
pub fn outcomes(program: &ConstraintProgram, scene: &SceneState, mode: OccupancyMode) -> Vec<Outcome> {
    outcomes_with(&EvalContext::new(scene), program, mode)
}

pub fn outcomes_with(ctx: &EvalContext<'_>, program: &ConstraintProgram, mode: OccupancyMode) -> Vec<Outcome> {
    let scene = ctx.scene;
    let mut out = Vec::with_capacity(program.constraint_count());
    for i in 0..program.counts.len() {
        out.push(count_outcome(ctx, program, i));
    }
    for i in 0..program.relations.len() {
        out.push(relation_outcome(ctx, program, i));
    }
    if let Some((lo, hi)) = program.target_occupancy {
        let occ = measure_occupancy(scene, mode);
        out.push(Outcome {
            which: ConstraintRef::Occupancy,
            observed: occ,
            required: (lo, hi),
            penalty: range_distance(occ, lo, hi) * OCCUPANCY_PENALTY_SCALE,
        });
    }
    out
}

pub fn total_penalty(outcomes: &[Outcome]) -> f64 {
    outcomes.iter().map(|o| o.penalty).sum()
}

fn sentence(program: &ConstraintProgram, o: &Outcome) -> String {
    let id = o.which.id();
    match o.which {
        ConstraintRef::Count(i) => {
            let c = &program.counts[i];
            format!("constraint {id}: observed {} {}, required [{},{}]", o.observed, c.selector.noun(), c.low, c.high)
        }
        ConstraintRef::Relation(i) => {
            let r = &program.relations[i];
            format!(
                "constraint {id}: observed {} {} not {} {}, required [0,0]",
                o.observed,
                r.child.noun(),
                r.kind,
                r.parent
            )
        }
        ConstraintRef::Occupancy => format!(
            "constraint {id}: observed {:.3} occupancy, required [{},{}]",
            o.observed, o.required.0, o.required.1
        ),
    }
}

pub fn report_from(program: &ConstraintProgram, outcomes: &[Outcome], score: f64) -> SatisfactionReport {
    let mut satisfied = Vec::new();
    let mut violated = Vec::new();
    for o in outcomes {
        if o.satisfied() {
            satisfied.push(o.which.id());
        } else {
            violated.push(Violation {
                id: o.which.id(),
                observed: o.observed,
                required: [o.required.0, o.required.1],
                sentence: sentence(program, o),
            });
        }
    }
    SatisfactionReport { satisfied, violated, score }
}

pub fn evaluate_constraints(program: &ConstraintProgram, scene: &SceneState) -> SatisfactionReport {
    let o = outcomes(program, scene, OccupancyMode::Grid(DEFAULT_BEV_RESOLUTION));
    report_from(program, &o, evaluate_score(program, scene))
}

/// Mean over `a` instances of the distance to their nearest `b` partner (or wall).
fn mean_nearest_distance(ctx: &EvalContext<'_>, a: &Target, b: &Target) -> f64 {
    let left = ctx.matching_target(a);
    let right = ctx.matching_target(b);
    let mut sum = 0.0;
    let mut n = 0usize;
    for &i in &left {
        let ci = ctx.scene.instances[i].centroid();
        let d = match b {
            Target::Wall => nearest_wall(ctx.scene, ci.xy()).map(|w| w.0),
            Target::Objects(_) => right
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| ci.distance(ctx.scene.instances[j].centroid()))
                .min_by(f64::total_cmp),
        };
        if let Some(d) = d {
            sum += d;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean of (1 − cos 4Δ)/2 over matches, Δ being the yaw offset from the nearest wall.
fn mean_wall_misalignment(ctx: &EvalContext<'_>, a: &Target) -> f64 {
    let idx = ctx.matching_target(a);
    if idx.is_empty() {
        return 0.0;
    }
    let total: f64 = idx
        .iter()
        .map(|&i| {
            let inst = &ctx.scene.instances[i];
            match nearest_wall(ctx.scene, inst.pose.position()) {
                Some((_, w)) => {
                    let delta = normalize_angle(inst.pose.yaw - w.direction().angle());
                    (1.0 - (4.0 * delta).cos()) / 2.0
                }
                None => 0.0,
            }
        })
        .sum();
    total / idx.len() as f64
}

pub fn evaluate_score_with(ctx: &EvalContext<'_>, program: &ConstraintProgram) -> f64 {
    program
        .scores
        .iter()
        .map(|t| {
            let v = match t.objective {
                Objective::MaximizeDistance => mean_nearest_distance(ctx, &t.operands[0], &t.operands[1]),
                Objective::MinimizeDistance => -mean_nearest_distance(ctx, &t.operands[0], &t.operands[1]),
                Objective::MaximizeCount => ctx.matching_target(&t.operands[0]).len() as f64,
                Objective::WallAngleAlignment => -mean_wall_misalignment(ctx, &t.operands[0]),
            };
            t.weight * v
        })
        .sum()
}

pub fn evaluate_score(program: &ConstraintProgram, scene: &SceneState) -> f64 {
    evaluate_score_with(&EvalContext::new(scene), program)
}
