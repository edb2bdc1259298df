//! Simulated annealing over the augmented action space.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::actions::{apply_action, Action, ActionKind, CheckMode, Outcome, RevertReason};
use super::placement::{max_wall_gap, placement_of, Placement};
use super::schedule::OptimizerSchedule;
use super::{effective_catalog, LayoutError};
use crate::catalog::{AssetCatalog, AssetEntry};
use crate::constraints::eval::{evaluate_score_with, ConstraintRef, outcomes_with, total_penalty, EvalContext, OccupancyMode};
use crate::constraints::{evaluate_constraints, ConstraintProgram, SatisfactionReport, SemanticSelector, Target};
use crate::geometry::{Vec2, Vec3};
use crate::scene::{InstanceId, RelationKind, RelationTarget, SceneState};

/// Energy = penalty × PENALTY_WEIGHT − score.
pub const PENALTY_WEIGHT: f64 = 1000.0;
const ADD_ATTEMPTS: usize = 8;
const INIT_ATTEMPTS: usize = 24;
const TRANSLATE_SCALES: [f64; 3] = [0.05, 0.25, 1.0];
/// Share of the step budget the hierarchical baseline spends on roots.
pub const HIERARCHICAL_ROOT_SHARE: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutMode {
    Cluster,
    Hierarchical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    All,
    Roots,
    Children,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepResult {
    Accepted,
    Rejected,
    Reverted(RevertReason),
    /// No legal action or no valid target this step.
    Skipped,
}

/// Observation passed to step observers after each annealing step.
pub struct StepRecord<'a> {
    pub step: u64,
    pub kind: Option<ActionKind>,
    pub result: StepResult,
    pub penalty: f64,
    pub score: f64,
    pub scene: &'a SceneState,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizeStats {
    pub steps: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub reverted: u64,
    pub skipped: u64,
    pub best_penalty: f64,
    pub best_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutResult {
    pub scene: SceneState,
    pub report: SatisfactionReport,
    pub stats: OptimizeStats,
}

#[derive(Debug, Clone)]
struct AddCandidate {
    categories: Vec<String>,
    template: Option<(RelationKind, Target)>,
    /// For per-parent counts: the full count selector and its range.
    scoped: Option<(SemanticSelector, u32, u32)>,
    weight: f64,
}

impl AddCandidate {
    fn stable(&self) -> bool {
        self.template.as_ref().is_some_and(|t| t.0.is_stable_against())
    }
}

struct Annealer<'a> {
    program: &'a ConstraintProgram,
    catalog: AssetCatalog,
    schedule: &'a OptimizerSchedule,
    check: CheckMode,
    /// During the root phase of the hierarchical baseline, per-parent counts are
    /// left out of the penalty; children are placed in the next phase.
    phase: Phase,
    rng: ChaCha8Rng,
    scene: SceneState,
    penalty: f64,
    score: f64,
    best: SceneState,
    best_key: (f64, f64),
    stats: OptimizeStats,
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 > b.1)
}

impl<'a> Annealer<'a> {
    fn new(program: &'a ConstraintProgram, catalog: &AssetCatalog, schedule: &'a OptimizerSchedule, check: CheckMode) -> Self {
        let scene = SceneState::new(program.effective_room());
        let mut a = Self {
            program,
            catalog: effective_catalog(program, catalog),
            schedule,
            check,
            phase: Phase::All,
            rng: ChaCha8Rng::seed_from_u64(schedule.rng_seed),
            best: scene.clone(),
            scene,
            penalty: 0.0,
            score: 0.0,
            best_key: (f64::INFINITY, f64::NEG_INFINITY),
            stats: OptimizeStats::default(),
        };
        let (p, s) = a.evaluate(&a.scene);
        a.penalty = p;
        a.score = s;
        a.note_best();
        a
    }

    fn evaluate(&self, scene: &SceneState) -> (f64, f64) {
        let ctx = EvalContext::new(scene);
        let mut o = outcomes_with(&ctx, self.program, OccupancyMode::FootprintSum);
        if self.phase == Phase::Roots {
            o.retain(|x| !matches!(x.which, ConstraintRef::Count(i) if self.program.counts[i].scope.is_some()));
        }
        (total_penalty(&o), evaluate_score_with(&ctx, self.program))
    }

    fn energy(penalty: f64, score: f64) -> f64 {
        penalty * PENALTY_WEIGHT - score
    }

    fn note_best(&mut self) {
        let key = (self.penalty, self.score);
        if better(key, self.best_key) {
            self.best_key = key;
            self.best = self.scene.clone();
        }
    }

    // ---- candidate generation -------------------------------------------------

    fn resolve(&self, sel: &SemanticSelector) -> Vec<String> {
        match &sel.category {
            Some(c) => {
                if self.catalog.get(c).is_some_and(|e| sel.tags.is_subset(&e.tags)) {
                    vec![c.clone()]
                } else {
                    Vec::new()
                }
            }
            None => self.catalog.categories_with_tags(&sel.tags).map(str::to_string).collect(),
        }
    }

    fn relation_template(&self, category: &str) -> Option<(RelationKind, Target)> {
        let tags = &self.catalog.get(category)?.tags;
        self.program
            .relations
            .iter()
            .find(|r| r.child.category.as_deref().is_none_or(|c| c == category) && r.child.tags.is_subset(tags))
            .map(|r| (r.kind, r.parent.clone()))
    }

    fn candidates(&self, ctx: &EvalContext<'_>) -> Vec<AddCandidate> {
        let mut out = Vec::new();
        for c in &self.program.counts {
            let categories = self.resolve(&c.selector);
            if categories.is_empty() || c.high == 0 {
                continue;
            }
            let template = match c.selector.related_to.as_deref() {
                Some((k, t)) => Some((*k, t.clone())),
                None => categories.first().and_then(|cat| self.relation_template(cat)),
            };
            let weight = match &c.scope {
                None => {
                    let n = ctx.matching(&c.selector).len() as u32;
                    if n < c.low {
                        8.0
                    } else if n < c.high {
                        1.0
                    } else {
                        0.0
                    }
                }
                Some(parent_sel) => {
                    let counts = self.parent_counts(ctx, &c.selector, parent_sel);
                    if counts.iter().any(|(_, n)| *n < c.low) {
                        8.0
                    } else if counts.iter().any(|(_, n)| *n < c.high) {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            if weight > 0.0 {
                let scoped = c.scope.as_ref().map(|_| (c.selector.clone(), c.low, c.high));
                out.push(AddCandidate { categories, template, scoped, weight });
            }
        }
        for t in &self.program.scores {
            if t.objective != crate::constraints::Objective::MaximizeCount {
                continue;
            }
            if let Target::Objects(sel) = &t.operands[0] {
                let categories = self.resolve(sel);
                if let Some(first) = categories.first() {
                    let template = self.relation_template(first);
                    out.push(AddCandidate { categories, template, scoped: None, weight: 1.0 });
                }
            }
        }
        out
    }

    /// Matching parents with the number of their children matching `child_sel`.
    fn parent_counts(&self, ctx: &EvalContext<'_>, child_sel: &SemanticSelector, parent_sel: &SemanticSelector) -> Vec<(usize, u32)> {
        let matched = ctx.matching(child_sel);
        ctx.matching(parent_sel)
            .into_iter()
            .map(|p| {
                let pid = &self.scene.instances[p].id;
                (p, matched.iter().filter(|&&m| self.scene.instances[m].parent() == Some(pid)).count() as u32)
            })
            .collect()
    }

    fn sample_dims(&mut self, entry: &AssetEntry) -> Vec3 {
        let r = entry.dimension_ranges;
        let mut pick = |k: usize| if r[k].max > r[k].min { self.rng.gen_range(r[k].min..=r[k].max) } else { r[k].min };
        let x = pick(0);
        let y = pick(1);
        let z = pick(2);
        Vec3::new(x, y, z)
    }

    fn free_placement(&mut self, dims: Vec3) -> Placement {
        let nwalls = self.scene.room.floor_polygon.len();
        let w = self.scene.room.wall(self.rng.gen_range(0..nwalls)).expect("wall index in range");
        let yaw = w.direction().angle() + self.rng.gen_range(0..4) as f64 * FRAC_PI_2;
        let (s, c) = yaw.sin_cos();
        let ex = c.abs() * dims.x / 2.0 + s.abs() * dims.y / 2.0;
        let ey = s.abs() * dims.x / 2.0 + c.abs() * dims.y / 2.0;
        let (lo, hi) = self.scene.room.bounds();
        let mut axis = |a: f64, b: f64, e: f64| if b - a > 2.0 * e { self.rng.gen_range(a + e..=b - e) } else { (a + b) / 2.0 };
        let x = axis(lo.x, hi.x, ex);
        let y = axis(lo.y, hi.y, ey);
        Placement::Free { x, y, yaw }
    }

    fn choose_parent(
        &mut self,
        ctx: &EvalContext<'_>,
        cand: &AddCandidate,
        parent_sel: &SemanticSelector,
        needs_slots: bool,
        forced: Option<usize>,
    ) -> Option<usize> {
        if forced.is_some() {
            return forced;
        }
        let mut options: Vec<(usize, f64)> = match &cand.scoped {
            Some((child_sel, low, high)) => self
                .parent_counts(ctx, child_sel, parent_sel)
                .into_iter()
                .filter(|(_, n)| n < high)
                .map(|(p, n)| (p, if n < *low { 8.0 } else { 1.0 }))
                .collect(),
            None => ctx.matching(parent_sel).into_iter().map(|p| (p, 1.0)).collect(),
        };
        if needs_slots {
            options.retain(|(p, _)| {
                self.scene.asset(&self.scene.instances[*p].category).is_some_and(|a| !a.surface_slots.is_empty())
            });
        }
        let total: f64 = options.iter().map(|o| o.1).sum();
        if total <= 0.0 {
            return None;
        }
        let mut r = self.rng.gen_range(0.0..total);
        for (p, w) in &options {
            if r < *w {
                return Some(*p);
            }
            r -= w;
        }
        options.last().map(|o| o.0)
    }

    fn sample_placement(&mut self, ctx: &EvalContext<'_>, cand: &AddCandidate, dims: Vec3, parent: Option<usize>) -> Option<Placement> {
        match &cand.template {
            None => Some(self.free_placement(dims)),
            Some((kind, Target::Wall)) => {
                let nwalls = self.scene.room.floor_polygon.len();
                let wall = self.rng.gen_range(0..nwalls);
                let t = self.rng.gen_range(0.0..=1.0);
                let gap = if *kind == RelationKind::FlushWall { 0.0 } else { self.rng.gen_range(0.0..=max_wall_gap(*kind) / 2.0) };
                Some(Placement::Wall { kind: *kind, wall, t, gap })
            }
            Some((RelationKind::FrontAgainst, Target::Objects(psel))) => {
                let p = self.choose_parent(ctx, cand, psel, false, parent)?;
                Some(Placement::Front {
                    parent: self.scene.instances[p].id.clone(),
                    side: self.rng.gen_range(0..4),
                    t: self.rng.gen_range(0.0..=1.0),
                    gap: self.rng.gen_range(0.01..=0.08),
                })
            }
            Some((kind, Target::Objects(psel))) => {
                let p = self.choose_parent(ctx, cand, psel, true, parent)?;
                let pinst = &self.scene.instances[p];
                let nslots = self.scene.asset(&pinst.category).map_or(0, |a| a.surface_slots.len());
                let slot = self.rng.gen_range(0..nslots.max(1));
                Some(Placement::Stacked {
                    kind: *kind,
                    parent: pinst.id.clone(),
                    slot,
                    u: self.rng.gen_range(0.0..=1.0),
                    v: self.rng.gen_range(0.0..=1.0),
                    flip: self.rng.gen_bool(0.5),
                })
            }
        }
    }

    fn propose_add(&mut self, ctx: &EvalContext<'_>, cands: &[AddCandidate]) -> Option<Action> {
        let total: f64 = cands.iter().map(|c| c.weight).sum();
        if total <= 0.0 {
            return None;
        }
        let mut r = self.rng.gen_range(0.0..total);
        let mut chosen = &cands[cands.len() - 1];
        for c in cands {
            if r < c.weight {
                chosen = c;
                break;
            }
            r -= c.weight;
        }
        self.add_from(ctx, chosen, None)
    }

    fn add_from(&mut self, ctx: &EvalContext<'_>, cand: &AddCandidate, parent: Option<usize>) -> Option<Action> {
        let category = cand.categories.choose(&mut self.rng)?.clone();
        let entry = self.catalog.get(&category)?.clone();
        let dims = self.sample_dims(&entry);
        let placement = self.sample_placement(ctx, cand, dims, parent)?;
        if !self.scene.assets.contains_key(&category) {
            self.scene.assets.insert(category.clone(), entry);
        }
        Some(Action::Add { category, dims, placement })
    }

    // ---- eligibility ------------------------------------------------------------

    fn is_stable_child(&self, i: usize) -> bool {
        self.scene.instances[i].relation.as_ref().is_some_and(|r| r.kind.is_stable_against())
    }

    fn in_phase(&self, i: usize, phase: Phase) -> bool {
        match phase {
            Phase::All => true,
            Phase::Roots => !self.is_stable_child(i),
            Phase::Children => self.is_stable_child(i),
        }
    }

    fn parents(&self) -> BTreeSet<InstanceId> {
        self.scene.instances.iter().filter_map(|i| i.parent().cloned()).collect()
    }

    fn leaves(&self, phase: Phase) -> Vec<usize> {
        let parents = self.parents();
        (0..self.scene.len()).filter(|&i| !parents.contains(&self.scene.instances[i].id) && self.in_phase(i, phase)).collect()
    }

    fn roots(&self) -> Vec<usize> {
        (0..self.scene.len()).filter(|&i| !self.is_stable_child(i)).collect()
    }

    fn is_wall_attached(&self, i: usize) -> bool {
        matches!(self.scene.instances[i].relation.as_ref().map(|r| &r.target), Some(RelationTarget::Wall(_)))
    }

    fn legal_kinds(&self, phase: Phase, cands: &[AddCandidate]) -> Vec<(ActionKind, f64)> {
        let leaves = self.leaves(phase);
        let mut out = Vec::new();
        for kind in ActionKind::ALL {
            let mut w = self.schedule.probability(kind);
            if w <= 0.0 {
                continue;
            }
            let legal = match kind {
                ActionKind::Add => cands.iter().any(|c| c.weight > 0.0),
                ActionKind::Delete => {
                    w *= self.program.delete_bias;
                    (0..self.scene.len()).any(|i| self.in_phase(i, phase))
                }
                ActionKind::Resample | ActionKind::Translate => !leaves.is_empty(),
                ActionKind::Rotate => leaves.iter().any(|&i| !self.is_wall_attached(i)),
                ActionKind::ChangeRelationPlane => leaves.iter().any(|&i| self.plane_options(i) > 1),
                ActionKind::ChangeRelationTarget => leaves.iter().any(|&i| self.scene.instances[i].relation.is_some()),
                ActionKind::Swap => leaves.len() >= 2,
                ActionKind::ResampleCluster | ActionKind::TranslateCluster | ActionKind::RotateCluster => {
                    phase == Phase::All && self.check == CheckMode::Cluster && !self.scene.is_empty()
                }
            };
            if legal {
                out.push((kind, w));
            }
        }
        out
    }

    fn plane_options(&self, i: usize) -> usize {
        let inst = &self.scene.instances[i];
        match &inst.relation {
            Some(r) if r.kind == RelationKind::OnSurfaceOf => r
                .parent()
                .and_then(|p| self.scene.get(p))
                .and_then(|p| self.scene.asset(&p.category))
                .map_or(0, |a| a.surface_slots.len()),
            _ => 0,
        }
    }

    // ---- proposals ------------------------------------------------------------

    fn pick<T: Copy>(&mut self, items: &[T]) -> Option<T> {
        items.choose(&mut self.rng).copied()
    }

    fn delta(&mut self) -> Vec2 {
        let s = TRANSLATE_SCALES[self.rng.gen_range(0..TRANSLATE_SCALES.len())];
        Vec2::new(self.rng.gen_range(-s..=s), self.rng.gen_range(-s..=s))
    }

    fn propose(&mut self, kind: ActionKind, phase: Phase, ctx: &EvalContext<'_>, cands: &[AddCandidate]) -> Option<Action> {
        let id = |s: &Self, i: usize| s.scene.instances[i].id.clone();
        match kind {
            ActionKind::Add => {
                let filtered: Vec<AddCandidate> = cands.to_vec();
                self.propose_add(ctx, &filtered)
            }
            ActionKind::Delete => {
                let pool: Vec<usize> = (0..self.scene.len()).filter(|&i| self.in_phase(i, phase)).collect();
                let i = self.pick(&pool)?;
                Some(Action::Delete { target: id(self, i) })
            }
            ActionKind::Resample => {
                let i = self.pick(&self.leaves(phase))?;
                let entry = self.scene.asset(&self.scene.instances[i].category)?.clone();
                let dims = self.sample_dims(&entry);
                Some(Action::Resample { target: id(self, i), dims })
            }
            ActionKind::Translate => {
                let i = self.pick(&self.leaves(phase))?;
                let delta = self.delta();
                Some(Action::Translate { target: id(self, i), delta })
            }
            ActionKind::Rotate => {
                let pool: Vec<usize> = self.leaves(phase).into_iter().filter(|&i| !self.is_wall_attached(i)).collect();
                let i = self.pick(&pool)?;
                let cur = self.scene.instances[i].pose.yaw;
                let yaw = if self.rng.gen_bool(0.75) {
                    cur + self.rng.gen_range(1..4) as f64 * FRAC_PI_2
                } else {
                    self.rng.gen_range(-PI..PI)
                };
                Some(Action::Rotate { target: id(self, i), yaw })
            }
            ActionKind::ChangeRelationPlane => {
                let pool: Vec<usize> = self.leaves(phase).into_iter().filter(|&i| self.plane_options(i) > 1).collect();
                let i = self.pick(&pool)?;
                let current = self.scene.instances[i].relation.as_ref().and_then(|r| r.slot).unwrap_or(0);
                let n = self.plane_options(i);
                let slot = (current + self.rng.gen_range(1..n)) % n;
                Some(Action::ChangeRelationPlane { target: id(self, i), slot })
            }
            ActionKind::ChangeRelationTarget => {
                let pool: Vec<usize> =
                    self.leaves(phase).into_iter().filter(|&i| self.scene.instances[i].relation.is_some()).collect();
                let i = self.pick(&pool)?;
                let rel = self.scene.instances[i].relation.clone()?;
                let parent = match &rel.target {
                    RelationTarget::Wall(w) => {
                        let n = self.scene.room.floor_polygon.len();
                        if n < 2 {
                            return None;
                        }
                        RelationTarget::Wall((w + self.rng.gen_range(1..n)) % n)
                    }
                    RelationTarget::Instance(pid) => {
                        let pcat = self.scene.get(pid)?.category.clone();
                        let me = &self.scene.instances[i].id;
                        let others: Vec<usize> = (0..self.scene.len())
                            .filter(|&k| {
                                let o = &self.scene.instances[k];
                                o.category == pcat && &o.id != pid && &o.id != me
                            })
                            .collect();
                        let k = self.pick(&others)?;
                        RelationTarget::Instance(id(self, k))
                    }
                };
                Some(Action::ChangeRelationTarget { target: id(self, i), parent })
            }
            ActionKind::Swap => {
                let leaves = self.leaves(phase);
                let a = self.pick(&leaves)?;
                let tags_a = self.scene.tags_of(&self.scene.instances[a].category).cloned().unwrap_or_default();
                let pool: Vec<usize> = leaves
                    .iter()
                    .copied()
                    .filter(|&b| {
                        b != a && self.scene.tags_of(&self.scene.instances[b].category).is_some_and(|t| !t.is_disjoint(&tags_a))
                    })
                    .collect();
                let b = self.pick(&pool)?;
                Some(Action::Swap { a: id(self, a), b: id(self, b) })
            }
            ActionKind::ResampleCluster => {
                let r = self.pick(&self.roots())?;
                let entry = self.scene.asset(&self.scene.instances[r].category)?.clone();
                let dims = self.sample_dims(&entry);
                Some(Action::ResampleCluster { root: id(self, r), dims: vec![(id(self, r), dims)] })
            }
            ActionKind::TranslateCluster => {
                let r = self.pick(&self.roots())?;
                let mut delta = self.delta();
                if let Some(Placement::Wall { wall, .. }) = placement_of(&self.scene, &self.scene.instances[r]) {
                    let d = self.scene.room.wall(wall)?.direction();
                    delta = d * delta.dot(d);
                }
                Some(Action::TranslateCluster { root: id(self, r), delta })
            }
            ActionKind::RotateCluster => {
                let pool: Vec<usize> = self.roots().into_iter().filter(|&i| !self.is_wall_attached(i)).collect();
                let r = self.pick(&pool)?;
                let angle = if self.rng.gen_bool(0.75) {
                    self.rng.gen_range(1..4) as f64 * FRAC_PI_2
                } else {
                    self.rng.gen_range(-PI..PI)
                };
                Some(Action::RotateCluster { root: id(self, r), angle })
            }
        }
    }

    fn phase_candidates(&self, ctx: &EvalContext<'_>, phase: Phase) -> Vec<AddCandidate> {
        let mut c = self.candidates(ctx);
        match phase {
            Phase::All => {}
            Phase::Roots => c.retain(|c| !c.stable()),
            Phase::Children => c.retain(|c| c.stable()),
        }
        c
    }

    /// Adds the minimum number of children every per-parent count asks of a
    /// freshly added parent, so a new cluster arrives whole. Children that do
    /// not fit are skipped.
    fn fill_children(&mut self, parent: usize) {
        for c in &self.program.counts {
            let Some(parent_sel) = &c.scope else { continue };
            if !EvalContext::new(&self.scene).matches(parent, parent_sel) {
                continue;
            }
            let categories = self.resolve(&c.selector);
            if categories.is_empty() {
                continue;
            }
            let template = c.selector.related_to.as_deref().map(|(k, t)| (*k, t.clone()));
            let cand = AddCandidate { categories, template, scoped: Some((c.selector.clone(), c.low, c.high)), weight: 8.0 };
            for _ in 0..c.low {
                for _ in 0..INIT_ATTEMPTS {
                    let snapshot = self.scene.clone();
                    let ctx = EvalContext::new(&snapshot);
                    let Some(action) = self.add_from(&ctx, &cand, Some(parent)) else { break };
                    if matches!(apply_action(&mut self.scene, &action, self.check), Ok(Outcome::Committed)) {
                        break;
                    }
                    self.scene = snapshot;
                }
            }
        }
    }

    /// Greedy seeding: add instances for under-count requirements, roots first.
    fn initialize(&mut self, phase: Phase) {
        let mut exhausted: BTreeSet<usize> = BTreeSet::new();
        for _ in 0..512 {
            let cands = {
                let ctx = EvalContext::new(&self.scene);
                self.phase_candidates(&ctx, phase)
            };
            let under: Vec<usize> =
                (0..cands.len()).filter(|i| cands[*i].weight >= 8.0 && !exhausted.contains(i)).collect();
            let pick = under.iter().copied().find(|&i| !cands[i].stable()).or_else(|| under.first().copied());
            let Some(ci) = pick else { break };
            let mut placed = false;
            for _ in 0..INIT_ATTEMPTS {
                let snapshot = self.scene.clone();
                let action = {
                    let ctx_scene = self.scene.clone();
                    let ctx = EvalContext::new(&ctx_scene);
                    self.add_from(&ctx, &cands[ci], None)
                };
                let Some(action) = action else { break };
                if matches!(apply_action(&mut self.scene, &action, self.check), Ok(Outcome::Committed)) {
                    if phase == Phase::All {
                        self.fill_children(self.scene.len() - 1);
                    }
                    let (p, s) = self.evaluate(&self.scene);
                    if p <= self.penalty {
                        self.penalty = p;
                        self.score = s;
                        self.note_best();
                        placed = true;
                        break;
                    }
                }
                self.scene = snapshot;
            }
            if !placed {
                exhausted.insert(ci);
            }
        }
    }

    fn anneal<F: FnMut(&StepRecord<'_>)>(&mut self, steps: std::ops::Range<u64>, phase: Phase, observe: &mut F) {
        for step in steps {
            if self.penalty == 0.0 && self.program.scores.is_empty() {
                break;
            }
            self.stats.steps += 1;
            let scene_copy = self.scene.clone();
            let ctx = EvalContext::new(&scene_copy);
            let cands = self.phase_candidates(&ctx, phase);
            let kinds = self.legal_kinds(phase, &cands);
            let total: f64 = kinds.iter().map(|k| k.1).sum();
            let mut result = StepResult::Skipped;
            let mut chosen = None;
            if total > 0.0 {
                let mut r = self.rng.gen_range(0.0..total);
                let mut kind = kinds[kinds.len() - 1].0;
                for (k, w) in &kinds {
                    if r < *w {
                        kind = *k;
                        break;
                    }
                    r -= w;
                }
                chosen = Some(kind);
                let attempts = if kind == ActionKind::Add { ADD_ATTEMPTS } else { 1 };
                let mut committed = false;
                for _ in 0..attempts {
                    let Some(action) = self.propose(kind, phase, &ctx, &cands) else { break };
                    match apply_action(&mut self.scene, &action, self.check) {
                        Ok(Outcome::Committed) => {
                            if kind == ActionKind::Add && phase == Phase::All {
                                self.fill_children(self.scene.len() - 1);
                            }
                            committed = true;
                            break;
                        }
                        Ok(Outcome::Reverted(reason)) => result = StepResult::Reverted(reason),
                        Err(_) => break,
                    }
                }
                if committed {
                    let (p, s) = self.evaluate(&self.scene);
                    let delta = Self::energy(p, s) - Self::energy(self.penalty, self.score);
                    let t = self.schedule.temperature(step);
                    let accept = delta <= 0.0 || self.rng.gen::<f64>() < (-delta / t).exp();
                    if accept {
                        self.penalty = p;
                        self.score = s;
                        self.note_best();
                        result = StepResult::Accepted;
                    } else {
                        self.scene = scene_copy.clone();
                        result = StepResult::Rejected;
                    }
                }
            }
            match result {
                StepResult::Accepted => self.stats.accepted += 1,
                StepResult::Rejected => self.stats.rejected += 1,
                StepResult::Reverted(_) => self.stats.reverted += 1,
                StepResult::Skipped => self.stats.skipped += 1,
            }
            observe(&StepRecord { step, kind: chosen, result, penalty: self.penalty, score: self.score, scene: &self.scene });
        }
    }

    fn finish(mut self) -> LayoutResult {
        self.stats.best_penalty = self.best_key.0;
        self.stats.best_score = self.best_key.1;
        let report = evaluate_constraints(self.program, &self.best);
        LayoutResult { scene: self.best, report, stats: self.stats }
    }
}

fn validate(program: &ConstraintProgram, schedule: &OptimizerSchedule) -> Result<(), LayoutError> {
    schedule.validate()?;
    program.effective_room().validate().map_err(|e| LayoutError::InvalidRoom(e.to_string()))
}

/// Runs the optimizer in `mode`, calling `observe` after every annealing step.
pub fn optimize_layout_observed<F: FnMut(&StepRecord<'_>)>(
    program: &ConstraintProgram,
    catalog: &AssetCatalog,
    schedule: &OptimizerSchedule,
    mode: LayoutMode,
    mut observe: F,
) -> Result<LayoutResult, LayoutError> {
    validate(program, schedule)?;
    match mode {
        LayoutMode::Cluster => {
            let mut a = Annealer::new(program, catalog, schedule, CheckMode::Cluster);
            a.initialize(Phase::All);
            a.anneal(0..schedule.max_steps, Phase::All, &mut observe);
            Ok(a.finish())
        }
        LayoutMode::Hierarchical => {
            let mut a = Annealer::new(program, catalog, schedule, CheckMode::Instance);
            let split = (schedule.max_steps as f64 * HIERARCHICAL_ROOT_SHARE).round() as u64;
            a.phase = Phase::Roots;
            let (p, s) = a.evaluate(&a.scene);
            (a.penalty, a.score) = (p, s);
            a.best_key = (p, s);
            a.initialize(Phase::Roots);
            a.anneal(0..split, Phase::Roots, &mut observe);
            // Roots are frozen from here on; continue from the best root layout.
            a.phase = Phase::Children;
            a.scene = a.best.clone();
            let (p, s) = a.evaluate(&a.scene);
            (a.penalty, a.score) = (p, s);
            a.best_key = (p, s);
            a.initialize(Phase::Children);
            a.anneal(split..schedule.max_steps, Phase::Children, &mut observe);
            Ok(a.finish())
        }
    }
}

pub fn optimize_layout(program: &ConstraintProgram, catalog: &AssetCatalog, schedule: &OptimizerSchedule) -> Result<LayoutResult, LayoutError> {
    optimize_layout_observed(program, catalog, schedule, LayoutMode::Cluster, |_| {})
}

pub fn optimize_layout_hierarchical(
    program: &ConstraintProgram,
    catalog: &AssetCatalog,
    schedule: &OptimizerSchedule,
) -> Result<LayoutResult, LayoutError> {
    optimize_layout_observed(program, catalog, schedule, LayoutMode::Hierarchical, |_| {})
}
