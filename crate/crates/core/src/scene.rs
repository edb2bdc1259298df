//! Scene state: the room, the assets in use, and posed object instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{AssetEntry, PartBox};
use crate::geometry::{OrientedBox, RoomSpec, Vec2, Vec3};

pub const SCENE_SCHEMA: &str = "scene/1";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstanceId(pub String);

impl InstanceId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for InstanceId {
    fn from(s: &str) -> Self {
        InstanceId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    OnTopOf,
    AgainstWall,
    FrontAgainst,
    FlushWall,
    OnSurfaceOf,
}

impl RelationKind {
    pub const ALL: [RelationKind; 5] = [
        RelationKind::OnTopOf,
        RelationKind::AgainstWall,
        RelationKind::FrontAgainst,
        RelationKind::FlushWall,
        RelationKind::OnSurfaceOf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationKind::OnTopOf => "on_top_of",
            RelationKind::AgainstWall => "against_wall",
            RelationKind::FrontAgainst => "front_against",
            RelationKind::FlushWall => "flush_wall",
            RelationKind::OnSurfaceOf => "on_surface_of",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Relations that bind a child to a parent object (as opposed to a wall).
    pub fn is_stable_against(self) -> bool {
        matches!(self, RelationKind::OnTopOf | RelationKind::FrontAgainst | RelationKind::OnSurfaceOf)
    }

    /// Child rests on a support surface of its parent.
    pub fn is_stacking(self) -> bool {
        matches!(self, RelationKind::OnTopOf | RelationKind::OnSurfaceOf)
    }

    pub fn targets_wall(self) -> bool {
        matches!(self, RelationKind::AgainstWall | RelationKind::FlushWall)
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationTarget {
    Instance(InstanceId),
    Wall(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub kind: RelationKind,
    pub target: RelationTarget,
    /// Support slot index on the parent for stacking relations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<usize>,
}

impl Relation {
    pub fn parent(&self) -> Option<&InstanceId> {
        match &self.target {
            RelationTarget::Instance(id) => Some(id),
            RelationTarget::Wall(_) => None,
        }
    }
}

/// Planar pose; `z` is the elevation of the object's base.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: InstanceId,
    pub category: String,
    pub pose: Pose,
    /// Full extents: x along the facing axis, y lateral, z height.
    pub dims: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<Relation>,
}

impl ObjectInstance {
    pub fn bbox(&self) -> OrientedBox {
        OrientedBox::new(
            Vec3::new(self.pose.x, self.pose.y, self.pose.z + 0.5 * self.dims.z),
            self.dims * 0.5,
            self.pose.yaw,
        )
    }

    pub fn centroid(&self) -> Vec3 {
        Vec3::new(self.pose.x, self.pose.y, self.pose.z + 0.5 * self.dims.z)
    }

    pub fn parent(&self) -> Option<&InstanceId> {
        self.relation.as_ref().and_then(|r| r.parent())
    }

    /// World-space boxes of the asset's parts.
    pub fn part_boxes(&self, parts: &[PartBox]) -> Vec<OrientedBox> {
        let base = self.bbox();
        parts
            .iter()
            .map(|p| {
                let lo = Vec3::new((p.min[0] - 0.5) * self.dims.x, (p.min[1] - 0.5) * self.dims.y, (p.min[2] - 0.5) * self.dims.z);
                let hi = Vec3::new((p.max[0] - 0.5) * self.dims.x, (p.max[1] - 0.5) * self.dims.y, (p.max[2] - 0.5) * self.dims.z);
                let c = base.to_world((lo + hi) * 0.5);
                OrientedBox::new(c, (hi - lo) * 0.5, base.yaw)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub room: RoomSpec,
    /// Catalog entries for every category present (or ever placed) in the scene.
    pub assets: BTreeMap<String, AssetEntry>,
    pub instances: Vec<ObjectInstance>,
    /// Next serial used when minting instance ids.
    pub next_serial: u64,
}

impl SceneState {
    pub fn new(room: RoomSpec) -> Self {
        Self { room, assets: BTreeMap::new(), instances: Vec::new(), next_serial: 0 }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn index_of(&self, id: &InstanceId) -> Option<usize> {
        self.instances.iter().position(|i| &i.id == id)
    }

    pub fn get(&self, id: &InstanceId) -> Option<&ObjectInstance> {
        self.instances.iter().find(|i| &i.id == id)
    }

    pub fn tags_of(&self, category: &str) -> Option<&BTreeSet<String>> {
        self.assets.get(category).map(|a| &a.tags)
    }

    pub fn asset(&self, category: &str) -> Option<&AssetEntry> {
        self.assets.get(category)
    }

    pub fn mint_id(&mut self, category: &str) -> InstanceId {
        let id = InstanceId(format!("{category}_{}", self.next_serial));
        self.next_serial += 1;
        id
    }

    /// Direct children (instances whose relation targets `id`).
    pub fn children_of<'a>(&'a self, id: &'a InstanceId) -> impl Iterator<Item = &'a ObjectInstance> + 'a {
        self.instances.iter().filter(move |i| i.parent() == Some(id))
    }

    /// Parts used for rendering an instance.
    pub fn parts_of(&self, inst: &ObjectInstance) -> &[PartBox] {
        self.assets.get(&inst.category).map(|a| a.parts()).unwrap_or(std::slice::from_ref(&PartBox::FULL))
    }

    pub fn to_document(&self) -> SceneDocument {
        let clusters = crate::layout::identify_clusters(self)
            .map(|cs| cs.into_iter().map(|c| ClusterRecord { root: c.root, children: c.children, collective_box: c.collective_box }).collect())
            .unwrap_or_default();
        SceneDocument { schema: SCENE_SCHEMA.to_string(), scene: self.clone(), clusters }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SceneFormatError> {
        let doc: SceneDocument = serde_json::from_str(text)?;
        if doc.schema != SCENE_SCHEMA {
            return Err(SceneFormatError::Schema(doc.schema));
        }
        doc.scene.room.validate().map_err(|e| SceneFormatError::Invalid(e.to_string()))?;
        Ok(doc.scene)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRecord {
    pub root: InstanceId,
    pub children: Vec<InstanceId>,
    pub collective_box: OrientedBox,
}

/// On-disk `scene/1` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub schema: String,
    #[serde(flatten)]
    pub scene: SceneState,
    #[serde(default)]
    pub clusters: Vec<ClusterRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum SceneFormatError {
    #[error("malformed scene json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported scene schema {0:?}")]
    Schema(String),
    #[error("invalid scene: {0}")]
    Invalid(String),
}
