//! Attachment-parameterized poses. A placement plus the instance's dims fully
//! determines its pose and declared relation, so children can be re-seated
//! after their parent moves or changes size.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::constraints::relations::{relation_slot, AGAINST_WALL_GAP, FLUSH_WALL_GAP, FRONT_GAP};
use crate::geometry::{normalize_angle, Vec2, Vec3};
use crate::scene::{InstanceId, ObjectInstance, Pose, Relation, RelationKind, RelationTarget, SceneState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Placement {
    /// Standing on the floor (or at the asset's mount height) with no relation.
    Free { x: f64, y: f64, yaw: f64 },
    /// Resting on a support slot; `u`, `v` in [0,1] span the feasible centers.
    Stacked { kind: RelationKind, parent: InstanceId, slot: usize, u: f64, v: f64, flip: bool },
    /// Facing side `side` (0 = +x, 1 = +y, 2 = −x, 3 = −y of the parent frame).
    Front { parent: InstanceId, side: u8, t: f64, gap: f64 },
    /// Back against wall `wall`, `t` in [0,1] along its usable length.
    Wall { kind: RelationKind, wall: usize, t: f64, gap: f64 },
}

impl Placement {
    pub fn parent(&self) -> Option<&InstanceId> {
        match self {
            Placement::Stacked { parent, .. } | Placement::Front { parent, .. } => Some(parent),
            _ => None,
        }
    }

    pub fn relation_kind(&self) -> Option<RelationKind> {
        match self {
            Placement::Free { .. } => None,
            Placement::Stacked { kind, .. } | Placement::Wall { kind, .. } => Some(*kind),
            Placement::Front { .. } => Some(RelationKind::FrontAgainst),
        }
    }
}

pub fn max_wall_gap(kind: RelationKind) -> f64 {
    if kind == RelationKind::FlushWall {
        FLUSH_WALL_GAP
    } else {
        AGAINST_WALL_GAP
    }
}

fn base_elevation(scene: &SceneState, category: &str) -> f64 {
    scene.asset(category).and_then(|a| a.mount_height).unwrap_or(0.0)
}

fn side_normal(side: u8) -> Vec2 {
    Vec2::from_angle(side as f64 * FRAC_PI_2)
}

/// Half-extent of the parent along a side normal, and that side's length.
fn side_geometry(parent: &ObjectInstance, side: u8) -> (f64, f64) {
    if side.is_multiple_of(2) {
        (parent.dims.x / 2.0, parent.dims.y)
    } else {
        (parent.dims.y / 2.0, parent.dims.x)
    }
}

/// Center interval (local coordinate) of a child of half-width `h` on `[lo, hi]·size`.
fn slot_interval(lo: f64, hi: f64, size: f64, h: f64) -> Option<(f64, f64)> {
    let a = (lo - 0.5) * size + h;
    let b = (hi - 0.5) * size - h;
    (a <= b + 1e-12).then_some((a, b.max(a)))
}

/// Pose and relation realized by `placement` for an object of `category` and `dims`.
/// `None` when the placement is geometrically impossible (e.g. the child does not fit).
pub fn realize(scene: &SceneState, category: &str, dims: Vec3, placement: &Placement) -> Option<(Pose, Option<Relation>)> {
    match placement {
        Placement::Free { x, y, yaw } => {
            Some((Pose { x: *x, y: *y, z: base_elevation(scene, category), yaw: normalize_angle(*yaw) }, None))
        }
        Placement::Stacked { kind, parent, slot, u, v, flip } => {
            let p = scene.get(parent)?;
            let s = relation_slot(scene, *kind, p, Some(*slot))?;
            if *kind == RelationKind::OnSurfaceOf && s != *slot {
                return None;
            }
            let sl = scene.asset(&p.category)?.surface_slots.get(s)?;
            let (x0, x1) = slot_interval(sl.min[0], sl.max[0], p.dims.x, dims.x / 2.0)?;
            let (y0, y1) = slot_interval(sl.min[1], sl.max[1], p.dims.y, dims.y / 2.0)?;
            let local = Vec2::new(x0 + u.clamp(0.0, 1.0) * (x1 - x0), y0 + v.clamp(0.0, 1.0) * (y1 - y0));
            let c = p.pose.position() + local.rotated(p.pose.yaw);
            let yaw = normalize_angle(p.pose.yaw + if *flip { PI } else { 0.0 });
            let z = p.pose.z + sl.height * p.dims.z;
            let rel = Relation {
                kind: *kind,
                target: RelationTarget::Instance(parent.clone()),
                slot: (*kind == RelationKind::OnSurfaceOf).then_some(s),
            };
            Some((Pose { x: c.x, y: c.y, z, yaw }, Some(rel)))
        }
        Placement::Front { parent, side, t, gap } => {
            let p = scene.get(parent)?;
            let side = side % 4;
            let n = side_normal(side);
            let (hp, len) = side_geometry(p, side);
            let s = (t.clamp(0.0, 1.0) - 0.5) * (len - dims.y).max(0.0);
            let local = n * (hp + gap + dims.x / 2.0) + n.perp() * s;
            let c = p.pose.position() + local.rotated(p.pose.yaw);
            let yaw = normalize_angle(p.pose.yaw + side as f64 * FRAC_PI_2 + PI);
            let rel = Relation { kind: RelationKind::FrontAgainst, target: RelationTarget::Instance(parent.clone()), slot: None };
            Some((Pose { x: c.x, y: c.y, z: base_elevation(scene, category), yaw }, Some(rel)))
        }
        Placement::Wall { kind, wall, t, gap } => {
            let w = scene.room.wall(*wall)?;
            let len = w.length();
            if len < dims.y {
                return None;
            }
            let hy = dims.y / 2.0;
            let a = hy + t.clamp(0.0, 1.0) * (len - dims.y);
            let n = w.inward_normal();
            let c = w.start + w.direction() * a + n * (gap + dims.x / 2.0);
            let rel = Relation { kind: *kind, target: RelationTarget::Wall(*wall), slot: None };
            Some((Pose { x: c.x, y: c.y, z: base_elevation(scene, category), yaw: normalize_angle(n.angle()) }, Some(rel)))
        }
    }
}

fn unit_param(value: f64, lo: f64, hi: f64) -> f64 {
    if hi - lo <= 1e-12 {
        0.5
    } else {
        ((value - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

/// Placement that best reproduces `inst` at `pose` given its declared relation,
/// projecting onto the relation's manifold (parameters are clamped).
pub fn placement_at(scene: &SceneState, inst: &ObjectInstance, pose: &Pose) -> Option<Placement> {
    let Some(rel) = &inst.relation else {
        return Some(Placement::Free { x: pose.x, y: pose.y, yaw: pose.yaw });
    };
    let dims = inst.dims;
    match (&rel.target, rel.kind) {
        (RelationTarget::Wall(i), kind) => {
            let w = scene.room.wall(*i)?;
            let off = pose.position() - w.start;
            let hy = dims.y / 2.0;
            let t = unit_param(off.dot(w.direction()), hy, w.length() - hy);
            let gap = (off.dot(w.inward_normal()) - dims.x / 2.0).clamp(0.0, max_wall_gap(kind));
            Some(Placement::Wall { kind, wall: *i, t, gap })
        }
        (RelationTarget::Instance(pid), RelationKind::FrontAgainst) => {
            let p = scene.get(pid)?;
            let facing = Vec2::from_angle(pose.yaw - p.pose.yaw);
            let k = ((-facing).angle() / FRAC_PI_2).round().rem_euclid(4.0) as u8;
            let n = side_normal(k);
            let (hp, len) = side_geometry(p, k);
            let local = (pose.position() - p.pose.position()).rotated(-p.pose.yaw);
            let gap = (local.dot(n) - hp - dims.x / 2.0).clamp(0.0, FRONT_GAP);
            let span = (len - dims.y).max(0.0);
            let t = if span <= 1e-12 { 0.5 } else { (local.dot(n.perp()) / span + 0.5).clamp(0.0, 1.0) };
            Some(Placement::Front { parent: pid.clone(), side: k, t, gap })
        }
        (RelationTarget::Instance(pid), kind) => {
            let p = scene.get(pid)?;
            let slot = relation_slot(scene, kind, p, rel.slot)?;
            let sl = scene.asset(&p.category)?.surface_slots.get(slot)?;
            let local = (pose.position() - p.pose.position()).rotated(-p.pose.yaw);
            let (x0, x1) = slot_interval(sl.min[0], sl.max[0], p.dims.x, dims.x / 2.0)?;
            let (y0, y1) = slot_interval(sl.min[1], sl.max[1], p.dims.y, dims.y / 2.0)?;
            let flip = normalize_angle(pose.yaw - p.pose.yaw).abs() > FRAC_PI_2;
            Some(Placement::Stacked {
                kind,
                parent: pid.clone(),
                slot,
                u: unit_param(local.x, x0, x1),
                v: unit_param(local.y, y0, y1),
                flip,
            })
        }
    }
}

pub fn placement_of(scene: &SceneState, inst: &ObjectInstance) -> Option<Placement> {
    placement_at(scene, inst, &inst.pose)
}
