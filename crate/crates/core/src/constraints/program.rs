use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::catalog::DimRange;
use crate::geometry::RoomSpec;
use crate::scene::RelationKind;

/// Predicate over object instances: category and/or tags, optionally
/// restricted to instances holding a relation to a matching parent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemanticSelector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub related_to: Option<Box<(RelationKind, Target)>>,
}

/// The parent side of a relation: the room's walls or a set of objects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Wall,
    Objects(SemanticSelector),
}

impl SemanticSelector {
    pub fn category(name: &str) -> Self {
        Self { category: Some(name.to_string()), tags: BTreeSet::new(), related_to: None }
    }

    pub fn with_relation(mut self, kind: RelationKind, target: Target) -> Self {
        self.related_to = Some(Box::new((kind, target)));
        self
    }

    /// The same selector without its relation filter.
    pub fn base(&self) -> SemanticSelector {
        SemanticSelector { category: self.category.clone(), tags: self.tags.clone(), related_to: None }
    }

    /// Short noun used in report sentences and questions.
    pub fn noun(&self) -> String {
        match &self.category {
            Some(c) => c.clone(),
            None => self.tags.iter().cloned().collect::<Vec<_>>().join("/"),
        }
    }

    fn write_base(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = &self.category {
            f.write_str(c)?;
        }
        if !self.tags.is_empty() {
            write!(f, "[{}]", self.tags.iter().cloned().collect::<Vec<_>>().join(","))?;
        }
        Ok(())
    }
}

impl fmt::Display for SemanticSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_base(f)?;
        if let Some(rel) = &self.related_to {
            write!(f, " where {} {}", rel.0, rel.1)?;
        }
        Ok(())
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Wall => f.write_str("wall"),
            Target::Objects(s) => s.write_base(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountConstraint {
    pub selector: SemanticSelector,
    pub low: u32,
    pub high: u32,
    /// When set, the range applies to the children of each matching parent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<SemanticSelector>,
}

impl CountConstraint {
    pub fn new(selector: SemanticSelector, low: u32, high: u32) -> Self {
        let scope = match selector.related_to.as_deref() {
            Some((_, Target::Objects(p))) => Some(p.clone()),
            _ => None,
        };
        Self { selector, low, high, scope }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationConstraint {
    pub kind: RelationKind,
    pub child: SemanticSelector,
    pub parent: Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MaximizeDistance,
    MinimizeDistance,
    MaximizeCount,
    WallAngleAlignment,
}

impl Objective {
    pub const ALL: [Objective; 4] =
        [Objective::MaximizeDistance, Objective::MinimizeDistance, Objective::MaximizeCount, Objective::WallAngleAlignment];

    pub fn name(self) -> &'static str {
        match self {
            Objective::MaximizeDistance => "maximize_distance",
            Objective::MinimizeDistance => "minimize_distance",
            Objective::MaximizeCount => "maximize_count",
            Objective::WallAngleAlignment => "wall_angle_alignment",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Objective::MaximizeDistance | Objective::MinimizeDistance => 2,
            Objective::MaximizeCount | Objective::WallAngleAlignment => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTerm {
    pub objective: Objective,
    pub operands: Vec<Target>,
    pub weight: f64,
}

/// Per-axis dimension overrides for one asset category.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AssetOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<DimRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<DimRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<DimRange>,
}

impl AssetOverride {
    pub fn axis(&self, i: usize) -> Option<DimRange> {
        [self.x, self.y, self.z][i]
    }

    pub fn set_axis(&mut self, i: usize, r: DimRange) {
        match i {
            0 => self.x = Some(r),
            1 => self.y = Some(r),
            _ => self.z = Some(r),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_none() && self.y.is_none() && self.z.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintProgram {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<RoomSpec>,
    #[serde(default)]
    pub room_resizable: bool,
    /// Area multiplier applied to the room polygon when realizing the program.
    #[serde(default = "one")]
    pub room_scale: f64,
    #[serde(default)]
    pub counts: Vec<CountConstraint>,
    #[serde(default)]
    pub relations: Vec<RelationConstraint>,
    #[serde(default)]
    pub scores: Vec<ScoreTerm>,
    #[serde(default)]
    pub asset_overrides: BTreeMap<String, AssetOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_occupancy: Option<(f64, f64)>,
    /// Multiplier on the optimizer's delete-action probability.
    #[serde(default = "one")]
    pub delete_bias: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ConstraintProgram {
    fn default() -> Self {
        Self {
            room: None,
            room_resizable: false,
            room_scale: 1.0,
            counts: Vec::new(),
            relations: Vec::new(),
            scores: Vec::new(),
            asset_overrides: BTreeMap::new(),
            target_occupancy: None,
            delete_bias: 1.0,
        }
    }
}

/// Room used when a program does not declare one: 6 m × 5 m, 2.8 m walls.
pub fn default_room() -> RoomSpec {
    RoomSpec::rectangle(6.0, 5.0, 2.8)
}

impl ConstraintProgram {
    pub fn constraint_count(&self) -> usize {
        self.counts.len() + self.relations.len() + usize::from(self.target_occupancy.is_some())
    }

    /// The room the optimizer realizes: the declared (or default) room, scaled.
    pub fn effective_room(&self) -> RoomSpec {
        let base = self.room.clone().unwrap_or_else(default_room);
        if (self.room_scale - 1.0).abs() < 1e-12 {
            base
        } else {
            base.scaled(self.room_scale)
        }
    }

    /// Canonical DSL text. Parsing it yields a program equal to `self`.
    pub fn to_dsl(&self) -> String {
        let mut s = String::new();
        if let Some(r) = &self.room {
            s.push_str("room polygon");
            for p in &r.floor_polygon {
                let _ = write!(s, " ({},{})", p.x, p.y);
            }
            let _ = write!(s, " height {} door ({},{})", r.wall_height, r.door_position.x, r.door_position.y);
            if self.room_resizable {
                s.push_str(" resizable");
            }
            s.push('\n');
        }
        if self.room_scale != 1.0 {
            let _ = writeln!(s, "room_scale {}", self.room_scale);
        }
        for c in &self.counts {
            let _ = writeln!(s, "count({}) in [{},{}]", c.selector, c.low, c.high);
        }
        for r in &self.relations {
            let _ = writeln!(s, "relation({}, {}, {})", r.kind, Target::Objects(r.child.base()), r.parent);
        }
        for t in &self.scores {
            let ops: Vec<String> = t.operands.iter().map(|o| o.to_string()).collect();
            let _ = writeln!(s, "score({}, {}, weight={})", t.objective.name(), ops.join(", "), t.weight);
        }
        if let Some((a, b)) = self.target_occupancy {
            let _ = writeln!(s, "occupancy in [{a},{b}]");
        }
        for (cat, o) in &self.asset_overrides {
            if o.is_empty() {
                continue;
            }
            let _ = write!(s, "asset {cat}");
            for (axis, r) in [("x", o.x), ("y", o.y), ("z", o.z)] {
                if let Some(r) = r {
                    let _ = write!(s, " {axis} [{},{}]", r.min, r.max);
                }
            }
            s.push('\n');
        }
        if self.delete_bias != 1.0 {
            let _ = writeln!(s, "hint delete_bias {}", self.delete_bias);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Every category named anywhere in the program.
    pub fn referenced_categories(&self) -> BTreeSet<String> {
        fn walk(sel: &SemanticSelector, out: &mut BTreeSet<String>) {
            if let Some(c) = &sel.category {
                out.insert(c.clone());
            }
            if let Some(r) = &sel.related_to {
                if let Target::Objects(p) = &r.1 {
                    walk(p, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        for c in &self.counts {
            walk(&c.selector, &mut out);
        }
        for r in &self.relations {
            walk(&r.child, &mut out);
            if let Target::Objects(p) = &r.parent {
                walk(p, &mut out);
            }
        }
        for t in &self.scores {
            for o in &t.operands {
                if let Target::Objects(p) = o {
                    walk(p, &mut out);
                }
            }
        }
        out
    }
}

/// Stable identifiers for the constraints of a program, in report order.
pub fn count_id(i: usize) -> String {
    format!("count_{i}")
}

pub fn relation_id(i: usize) -> String {
    format!("relation_{i}")
}

pub const OCCUPANCY_ID: &str = "occupancy";
