//! Spatial-reasoning QA tasks with ground truth read off the scene and the
//! camera trajectory, and the answer scoring rules.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::constraints::eval::EvalContext;
use crate::constraints::{SemanticSelector, Target};
use crate::geometry::fov_containment;
use crate::planner::Trajectory;
use crate::scene::{InstanceId, RelationKind, RelationTarget, SceneState};

pub const TASK_SCHEMA: &str = "task/1";
/// Guards the relative error against zero ground truths.
pub const SCORE_EPSILON: f64 = 1e-6;
pub const CHOICE_LABELS: [&str; 4] = ["A", "B", "C", "D"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFamily {
    Measurement,
    PerspectiveCounting,
    SpatiotemporalOrder,
}

impl TaskFamily {
    pub const ALL: [TaskFamily; 3] = [TaskFamily::Measurement, TaskFamily::PerspectiveCounting, TaskFamily::SpatiotemporalOrder];

    pub fn name(self) -> &'static str {
        match self {
            TaskFamily::Measurement => "measurement",
            TaskFamily::PerspectiveCounting => "perspective_counting",
            TaskFamily::SpatiotemporalOrder => "spatiotemporal_order",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    NumericMeters,
    NumericCount,
    OrderedChoice,
}

/// A numeric value or a choice label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Number(f64),
    Choice(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Height,
    Distance,
}

/// A uniquely identifying phrase for one instance and the selector it stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Referent {
    pub id: InstanceId,
    pub expression: String,
    pub selector: SemanticSelector,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub referents: Vec<Referent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<Measure>,
    /// Category counted, for counting tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    /// Instances that contributed to the answer.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instances: Vec<InstanceId>,
    /// Trajectory leg indices used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub legs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QATask {
    pub schema: String,
    pub id: String,
    pub family: TaskFamily,
    pub question: String,
    pub answer_type: AnswerType,
    pub ground_truth: Answer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error("answer type does not match task {0}")]
    TypeMismatch(String),
    #[error("malformed task line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn relation_phrase(kind: RelationKind) -> &'static str {
    match kind {
        RelationKind::OnTopOf => "on top of",
        RelationKind::AgainstWall => "against",
        RelationKind::FrontAgainst => "in front of",
        RelationKind::FlushWall => "flush with",
        RelationKind::OnSurfaceOf => "on",
    }
}

fn spoken(category: &str) -> String {
    category.replace('_', " ")
}

fn plural(category: &str) -> String {
    let s = spoken(category);
    if s.ends_with('s') || s.ends_with("sh") || s.ends_with("ch") || s.ends_with('x') {
        format!("{s}es")
    } else {
        format!("{s}s")
    }
}

/// Unique referring expression for instance `i`, if any: the bare category
/// when it is the only one, else category plus its declared relation.
pub fn referring_expression(ctx: &EvalContext<'_>, i: usize) -> Option<Referent> {
    let scene = ctx.scene;
    let inst = &scene.instances[i];
    let bare = SemanticSelector::category(&inst.category);
    let mut options = vec![(format!("the {}", spoken(&inst.category)), bare.clone())];
    if let Some(rel) = &inst.relation {
        let (target, noun) = match &rel.target {
            RelationTarget::Wall(_) => (Target::Wall, "the wall".to_string()),
            RelationTarget::Instance(p) => {
                let pcat = &scene.get(p)?.category;
                (Target::Objects(SemanticSelector::category(pcat)), format!("the {}", spoken(pcat)))
            }
        };
        let sel = bare.with_relation(rel.kind, target);
        options.push((format!("the {} {} {}", spoken(&inst.category), relation_phrase(rel.kind), noun), sel));
    }
    options.into_iter().find_map(|(expression, selector)| {
        let m = ctx.matching(&selector);
        (m.len() == 1 && m[0] == i).then(|| Referent { id: inst.id.clone(), expression, selector })
    })
}

fn referents(scene: &SceneState) -> Vec<Referent> {
    let ctx = EvalContext::new(scene);
    (0..scene.len()).filter_map(|i| referring_expression(&ctx, i)).collect()
}

/// Height and pairwise centroid-distance questions about uniquely referable objects.
pub fn gen_measurement<R: Rng>(scene: &SceneState, n: usize, rng: &mut R) -> Vec<QATask> {
    let refs = referents(scene);
    let mut candidates: Vec<(Measure, Vec<usize>)> = (0..refs.len()).map(|a| (Measure::Height, vec![a])).collect();
    for a in 0..refs.len() {
        for b in a + 1..refs.len() {
            candidates.push((Measure::Distance, vec![a, b]));
        }
    }
    candidates.shuffle(rng);
    candidates
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(k, (measure, which))| {
            let r: Vec<Referent> = which.iter().map(|&w| refs[w].clone()).collect();
            let inst = |j: usize| scene.get(&r[j].id).expect("referent exists");
            let (question, truth) = match measure {
                Measure::Height => (format!("What is the height of {} in meters?", r[0].expression), inst(0).dims.z),
                Measure::Distance => (
                    format!("What is the distance between {} and {} in meters?", r[0].expression, r[1].expression),
                    inst(0).centroid().distance(inst(1).centroid()),
                ),
            };
            QATask {
                schema: TASK_SCHEMA.into(),
                id: format!("measurement_{k}"),
                family: TaskFamily::Measurement,
                question,
                answer_type: AnswerType::NumericMeters,
                ground_truth: Answer::Number(truth),
                choices: None,
                provenance: Provenance {
                    instances: r.iter().map(|x| x.id.clone()).collect(),
                    referents: r,
                    measure: Some(measure),
                    ..Default::default()
                },
            }
        })
        .collect()
}

/// Instances (by index) inside the frustum of at least one frame of a leg,
/// with the legs that saw them.
pub fn visible_instances(scene: &SceneState, trajectory: &Trajectory) -> BTreeMap<usize, BTreeSet<usize>> {
    let boxes: Vec<_> = scene.instances.iter().map(|i| i.bbox()).collect();
    let mut seen: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (li, leg) in trajectory.legs.iter().enumerate() {
        for pose in &leg.frames {
            for (k, b) in boxes.iter().enumerate() {
                if fov_containment(pose, &trajectory.params.intrinsics, b) > 0.0 {
                    seen.entry(k).or_default().insert(li);
                }
            }
        }
    }
    seen
}

/// One "how many" question per category seen along the trajectory.
pub fn gen_counting<R: Rng>(scene: &SceneState, trajectory: &Trajectory, rng: &mut R) -> Vec<QATask> {
    let seen = visible_instances(scene, trajectory);
    let mut by_cat: BTreeMap<&str, (Vec<InstanceId>, BTreeSet<usize>)> = BTreeMap::new();
    for (&k, legs) in &seen {
        let inst = &scene.instances[k];
        let e = by_cat.entry(inst.category.as_str()).or_default();
        e.0.push(inst.id.clone());
        e.1.extend(legs);
    }
    let mut cats: Vec<_> = by_cat.into_iter().collect();
    cats.shuffle(rng);
    cats.into_iter()
        .enumerate()
        .map(|(k, (cat, (ids, legs)))| QATask {
            schema: TASK_SCHEMA.into(),
            id: format!("perspective_counting_{k}"),
            family: TaskFamily::PerspectiveCounting,
            question: format!("How many {} are in the video?", plural(cat)),
            answer_type: AnswerType::NumericCount,
            ground_truth: Answer::Number(ids.len() as f64),
            choices: None,
            provenance: Provenance { category: Some(cat.to_string()), instances: ids, legs: legs.into_iter().collect(), ..Default::default() },
        })
        .collect()
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Appearance-order questions over three visited, uniquely referable targets.
pub fn gen_order<R: Rng>(trajectory: &Trajectory, scene: &SceneState, n: usize, rng: &mut R) -> Vec<QATask> {
    let ctx = EvalContext::new(scene);
    let legs: Vec<(usize, Referent)> = trajectory
        .legs
        .iter()
        .enumerate()
        .filter_map(|(li, leg)| scene.index_of(&leg.target).and_then(|i| referring_expression(&ctx, i)).map(|r| (li, r)))
        .collect();
    if legs.len() < 3 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut pick: Vec<usize> = rand::seq::index::sample(rng, legs.len(), 3).into_vec();
        pick.sort_unstable();
        let ordered: Vec<&(usize, Referent)> = pick.iter().map(|&p| &legs[p]).collect();
        // Present the objects in a shuffled order in the question.
        let mut shown = ordered.clone();
        shown.shuffle(rng);
        let mut perms: Vec<[usize; 3]> = PERMUTATIONS[1..].to_vec();
        perms.shuffle(rng);
        let mut options: Vec<[usize; 3]> = vec![PERMUTATIONS[0]];
        options.extend_from_slice(&perms[..3]);
        options.shuffle(rng);
        let correct = options.iter().position(|p| *p == PERMUTATIONS[0]).expect("true order is among the options");
        let choices = options
            .iter()
            .map(|p| p.iter().map(|&j| ordered[j].1.expression.clone()).collect::<Vec<_>>().join(", then "))
            .collect();
        out.push(QATask {
            schema: TASK_SCHEMA.into(),
            id: format!("spatiotemporal_order_{k}"),
            family: TaskFamily::SpatiotemporalOrder,
            question: format!(
                "What's the appearance order of {}, {}, and {}?",
                shown[0].1.expression, shown[1].1.expression, shown[2].1.expression
            ),
            answer_type: AnswerType::OrderedChoice,
            ground_truth: Answer::Choice(CHOICE_LABELS[correct].to_string()),
            choices: Some(choices),
            provenance: Provenance {
                instances: ordered.iter().map(|x| x.1.id.clone()).collect(),
                referents: ordered.iter().map(|x| x.1.clone()).collect(),
                legs: ordered.iter().map(|x| x.0).collect(),
                ..Default::default()
            },
        });
    }
    out
}

/// Clipped relative accuracy for numeric tasks, exact match for choices.
pub fn score_answer(task: &QATask, answer: &Answer) -> Result<f64, TaskError> {
    match (&task.ground_truth, answer, task.answer_type) {
        (Answer::Number(t), Answer::Number(a), AnswerType::NumericMeters | AnswerType::NumericCount) => {
            Ok((1.0 - (a - t).abs() / t.max(SCORE_EPSILON)).max(0.0))
        }
        (Answer::Choice(t), Answer::Choice(a), AnswerType::OrderedChoice) => Ok(if t == a { 1.0 } else { 0.0 }),
        _ => Err(TaskError::TypeMismatch(task.id.clone())),
    }
}

/// How many tasks of each family to request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskCounts {
    pub measurement: usize,
    pub order: usize,
}

impl Default for TaskCounts {
    fn default() -> Self {
        Self { measurement: 20, order: 10 }
    }
}

/// All three families, ids unique within the returned list.
pub fn generate_tasks<R: Rng>(scene: &SceneState, trajectory: &Trajectory, counts: TaskCounts, rng: &mut R) -> Vec<QATask> {
    let mut out = gen_measurement(scene, counts.measurement, rng);
    out.extend(gen_counting(scene, trajectory, rng));
    out.extend(gen_order(trajectory, scene, counts.order, rng));
    out
}

/// [`generate_tasks`] driven by a ChaCha8 stream seeded with `seed`.
pub fn generate_tasks_seeded(scene: &SceneState, trajectory: &Trajectory, counts: TaskCounts, seed: u64) -> Vec<QATask> {
    generate_tasks(scene, trajectory, counts, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
}

pub fn to_jsonl(tasks: &[QATask]) -> String {
    let mut s = String::new();
    for t in tasks {
        s.push_str(&serde_json::to_string(t).expect("task serializes"));
        s.push('\n');
    }
    s
}

pub fn from_jsonl(text: &str) -> Result<Vec<QATask>, TaskError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let t: QATask = serde_json::from_str(l).map_err(|e| TaskError::Malformed { line: i + 1, message: e.to_string() })?;
            if t.schema != TASK_SCHEMA {
                return Err(TaskError::Malformed { line: i + 1, message: format!("unsupported schema {:?}", t.schema) });
            }
            Ok(t)
        })
        .collect()
}
