//! Geometric predicates behind the five relation kinds.

use crate::catalog::SurfaceSlot;
use crate::geometry::obb::{footprint_gap, ray_footprint_hit};
use crate::geometry::{OrientedBox, Vec2, Wall};
use crate::scene::{ObjectInstance, RelationKind, RelationTarget, SceneState};

/// Reach of the facing ray for `front_against`.
pub const FRONT_REACH: f64 = 0.5;
/// Largest footprint gap still counted as `front_against`.
pub const FRONT_GAP: f64 = 0.1;
pub const AGAINST_WALL_GAP: f64 = 0.1;
pub const FLUSH_WALL_GAP: f64 = 0.01;
const TOL: f64 = 1e-6;
/// Allowed yaw deviation when backing onto a wall.
const WALL_ANGLE_TOL: f64 = 1e-3;

/// `a` faces `b`: the facing ray from a's front face reaches b's footprint
/// within [`FRONT_REACH`] and the footprints are at most [`FRONT_GAP`] apart.
pub fn front_against(a: &OrientedBox, b: &OrientedBox) -> bool {
    let (fwd, _) = a.axes();
    let front = a.center.xy() + fwd * a.half_extents.x;
    match ray_footprint_hit(front, fwd, b) {
        Some(t) => t <= FRONT_REACH + TOL && footprint_gap(a, b) <= FRONT_GAP + TOL,
        None => false,
    }
}

/// `a` has its back face parallel to `wall`, facing into the room, at most `max_gap` away.
pub fn backs_onto_wall(a: &OrientedBox, wall: &Wall, max_gap: f64) -> bool {
    let (fwd, _) = a.axes();
    let n = wall.inward_normal();
    if fwd.dot(n) < WALL_ANGLE_TOL.cos() {
        return false;
    }
    let back = a.center.xy() - fwd * a.half_extents.x;
    let off = back - wall.start;
    let gap = off.dot(n);
    let along = off.dot(wall.direction());
    gap >= -TOL && gap <= max_gap + TOL && along >= -TOL && along <= wall.length() + TOL
}

/// World-space base elevation of a parent's support slot.
pub fn slot_elevation(parent: &ObjectInstance, slot: &SurfaceSlot) -> f64 {
    parent.pose.z + slot.height * parent.dims.z
}

/// `child` rests on `slot` of `parent`: base at the slot height, footprint inside the slot.
pub fn rests_on(child: &OrientedBox, parent: &ObjectInstance, slot: &SurfaceSlot) -> bool {
    if (child.bottom() - slot_elevation(parent, slot)).abs() > TOL {
        return false;
    }
    let pb = parent.bbox();
    child.footprint().iter().all(|c| {
        let l = (*c - pb.center.xy()).rotated(-pb.yaw);
        let u = l.x / parent.dims.x + 0.5;
        let v = l.y / parent.dims.y + 0.5;
        u >= slot.min[0] - TOL && u <= slot.max[0] + TOL && v >= slot.min[1] - TOL && v <= slot.max[1] + TOL
    })
}

/// Slot index a stacking relation uses on its parent.
pub fn relation_slot(scene: &SceneState, kind: RelationKind, parent: &ObjectInstance, slot: Option<usize>) -> Option<usize> {
    let asset = scene.asset(&parent.category)?;
    match kind {
        RelationKind::OnTopOf => asset.top_slot(),
        _ => slot.or_else(|| asset.top_slot()),
    }
}

/// Whether the relation declared on `inst` currently holds geometrically.
pub fn relation_holds(scene: &SceneState, inst: &ObjectInstance) -> bool {
    let Some(rel) = &inst.relation else { return false };
    let b = inst.bbox();
    match &rel.target {
        RelationTarget::Wall(i) => {
            let Some(wall) = scene.room.wall(*i) else { return false };
            match rel.kind {
                RelationKind::AgainstWall => backs_onto_wall(&b, &wall, AGAINST_WALL_GAP),
                RelationKind::FlushWall => backs_onto_wall(&b, &wall, FLUSH_WALL_GAP),
                _ => false,
            }
        }
        RelationTarget::Instance(pid) => {
            let Some(parent) = scene.get(pid) else { return false };
            match rel.kind {
                RelationKind::FrontAgainst => front_against(&b, &parent.bbox()),
                RelationKind::OnTopOf | RelationKind::OnSurfaceOf => {
                    let Some(s) = relation_slot(scene, rel.kind, parent, rel.slot) else { return false };
                    let Some(slot) = scene.asset(&parent.category).and_then(|a| a.surface_slots.get(s)) else {
                        return false;
                    };
                    rests_on(&b, parent, slot)
                }
                RelationKind::AgainstWall | RelationKind::FlushWall => false,
            }
        }
    }
}

/// Nearest wall to a planar point, as (distance, wall).
pub fn nearest_wall(scene: &SceneState, p: Vec2) -> Option<(f64, Wall)> {
    scene
        .room
        .walls()
        .map(|w| (w.distance_to(p), w))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}
