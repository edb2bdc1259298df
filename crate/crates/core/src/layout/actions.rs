//! The augmented action space and its transactional application.

use serde::{Deserialize, Serialize};

use super::cluster::{identify_clusters, root_indices};
use super::placement::{placement_at, placement_of, realize, Placement};
use super::LayoutError;
use crate::diagnostics::collisions::{exempt, stacking_ancestors};
use crate::geometry::{contained_in_room, Vec2, Vec3};
use crate::scene::{InstanceId, ObjectInstance, Pose, RelationKind, RelationTarget, SceneState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Add,
    Delete,
    Resample,
    Translate,
    Rotate,
    ChangeRelationPlane,
    ChangeRelationTarget,
    Swap,
    ResampleCluster,
    TranslateCluster,
    RotateCluster,
}

impl ActionKind {
    pub const ALL: [ActionKind; 11] = [
        ActionKind::Add,
        ActionKind::Delete,
        ActionKind::Resample,
        ActionKind::Translate,
        ActionKind::Rotate,
        ActionKind::ChangeRelationPlane,
        ActionKind::ChangeRelationTarget,
        ActionKind::Swap,
        ActionKind::ResampleCluster,
        ActionKind::TranslateCluster,
        ActionKind::RotateCluster,
    ];

    pub fn is_cluster(self) -> bool {
        matches!(self, ActionKind::ResampleCluster | ActionKind::TranslateCluster | ActionKind::RotateCluster)
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Add => "add",
            ActionKind::Delete => "delete",
            ActionKind::Resample => "resample",
            ActionKind::Translate => "translate",
            ActionKind::Rotate => "rotate",
            ActionKind::ChangeRelationPlane => "change_relation_plane",
            ActionKind::ChangeRelationTarget => "change_relation_target",
            ActionKind::Swap => "swap",
            ActionKind::ResampleCluster => "resample_cluster",
            ActionKind::TranslateCluster => "translate_cluster",
            ActionKind::RotateCluster => "rotate_cluster",
        }
    }
}

/// A fully parameterized edit. Cluster kinds name the cluster by its root id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Action {
    Add { category: String, dims: Vec3, placement: Placement },
    Delete { target: InstanceId },
    Resample { target: InstanceId, dims: Vec3 },
    /// Moves by `delta`, then projects back onto the instance's relation.
    Translate { target: InstanceId, delta: Vec2 },
    Rotate { target: InstanceId, yaw: f64 },
    ChangeRelationPlane { target: InstanceId, slot: usize },
    ChangeRelationTarget { target: InstanceId, parent: RelationTarget },
    Swap { a: InstanceId, b: InstanceId },
    /// New dims for any subset of members (the root included); children are re-seated.
    ResampleCluster { root: InstanceId, dims: Vec<(InstanceId, Vec3)> },
    TranslateCluster { root: InstanceId, delta: Vec2 },
    /// Rotation about the root's center.
    RotateCluster { root: InstanceId, angle: f64 },
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Add { .. } => ActionKind::Add,
            Action::Delete { .. } => ActionKind::Delete,
            Action::Resample { .. } => ActionKind::Resample,
            Action::Translate { .. } => ActionKind::Translate,
            Action::Rotate { .. } => ActionKind::Rotate,
            Action::ChangeRelationPlane { .. } => ActionKind::ChangeRelationPlane,
            Action::ChangeRelationTarget { .. } => ActionKind::ChangeRelationTarget,
            Action::Swap { .. } => ActionKind::Swap,
            Action::ResampleCluster { .. } => ActionKind::ResampleCluster,
            Action::TranslateCluster { .. } => ActionKind::TranslateCluster,
            Action::RotateCluster { .. } => ActionKind::RotateCluster,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevertReason {
    Collision,
    OutOfBoundary,
    ClusterCollision,
    /// Footprint reaches into the clear zone inside the door.
    DoorBlocked,
    /// The requested placement cannot be realized (e.g. a child wider than its slot).
    NoFit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Committed,
    Reverted(RevertReason),
}

/// Which collision checks a commit must pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Instance pairs plus cluster collective boxes.
    Cluster,
    /// Instance pairs only.
    Instance,
}

fn index(scene: &SceneState, id: &InstanceId) -> Result<usize, LayoutError> {
    scene.index_of(id).ok_or_else(|| LayoutError::UnknownTarget(id.clone()))
}

fn has_children(scene: &SceneState, id: &InstanceId) -> bool {
    scene.instances.iter().any(|i| i.parent() == Some(id))
}

fn check_dims(scene: &SceneState, category: &str, dims: Vec3) -> Result<(), LayoutError> {
    let asset = scene.asset(category).ok_or_else(|| LayoutError::UnknownCategory(category.to_string()))?;
    let d = [dims.x, dims.y, dims.z];
    for (k, r) in asset.dimension_ranges.iter().enumerate() {
        if !r.contains(d[k]) {
            return Err(LayoutError::DimsOutOfRange { category: category.to_string(), axis: k, value: d[k] });
        }
    }
    Ok(())
}

/// Instances (by index) in parent-before-child order within the subtree of `root`.
fn subtree(scene: &SceneState, root: usize) -> Vec<usize> {
    let mut out = vec![root];
    let mut k = 0;
    while k < out.len() {
        let id = &scene.instances[out[k]].id;
        for (j, inst) in scene.instances.iter().enumerate() {
            if inst.parent() == Some(id) && !out.contains(&j) {
                out.push(j);
            }
        }
        k += 1;
    }
    out
}

/// Re-seats the descendants of `root` (in parent-first order) from their recorded placements.
fn reseat(scene: &mut SceneState, order: &[usize], placements: &[Option<Placement>]) -> bool {
    for (k, &i) in order.iter().enumerate().skip(1) {
        let Some(p) = &placements[k] else { return false };
        let inst = &scene.instances[i];
        match realize(scene, &inst.category, inst.dims, p) {
            Some((pose, rel)) => {
                scene.instances[i].pose = pose;
                scene.instances[i].relation = rel;
            }
            None => return false,
        }
    }
    true
}

fn set_placement(scene: &mut SceneState, i: usize, p: &Placement) -> bool {
    let inst = &scene.instances[i];
    match realize(scene, &inst.category, inst.dims, p) {
        Some((pose, rel)) => {
            scene.instances[i].pose = pose;
            scene.instances[i].relation = rel;
            true
        }
        None => false,
    }
}

/// Hard feasibility of the instances in `changed` against everything else.
pub fn check_feasible(scene: &SceneState, changed: &[usize], mode: CheckMode) -> Result<(), RevertReason> {
    let boxes: Vec<_> = scene.instances.iter().map(|i| i.bbox()).collect();
    for &i in changed {
        if !contained_in_room(&boxes[i], &scene.room) {
            return Err(RevertReason::OutOfBoundary);
        }
    }
    let door = scene.room.door_zone();
    if changed.iter().any(|&i| boxes[i].intersects(&door)) {
        return Err(RevertReason::DoorBlocked);
    }
    let anc = stacking_ancestors(scene);
    for &i in changed {
        for j in 0..boxes.len() {
            if j == i || (changed.contains(&j) && j < i) {
                continue;
            }
            if !exempt(&anc, i, j) && boxes[i].intersects(&boxes[j]) {
                return Err(RevertReason::Collision);
            }
        }
    }
    if mode == CheckMode::Cluster && !changed.is_empty() {
        let roots = root_indices(scene).map_err(|_| RevertReason::Collision)?;
        let clusters = identify_clusters(scene).map_err(|_| RevertReason::Collision)?;
        let root_pos: Vec<usize> = clusters.iter().map(|c| scene.index_of(&c.root).unwrap_or(usize::MAX)).collect();
        for &i in changed {
            let Some(a) = root_pos.iter().position(|&r| r == roots[i]) else { continue };
            for (b, cb) in clusters.iter().enumerate() {
                if b != a && clusters[a].collective_box.intersects(&cb.collective_box) {
                    return Err(RevertReason::ClusterCollision);
                }
            }
        }
    }
    Ok(())
}

/// Applies `action` transactionally: on revert the scene is restored exactly.
pub fn apply_action(scene: &mut SceneState, action: &Action, mode: CheckMode) -> Result<Outcome, LayoutError> {
    let snapshot = scene.clone();
    match apply_inner(scene, action, mode) {
        Ok(Ok(())) => Ok(Outcome::Committed),
        Ok(Err(reason)) => {
            *scene = snapshot;
            Ok(Outcome::Reverted(reason))
        }
        Err(e) => {
            *scene = snapshot;
            Err(e)
        }
    }
}

fn require_leaf(scene: &SceneState, id: &InstanceId) -> Result<usize, LayoutError> {
    let i = index(scene, id)?;
    if has_children(scene, id) {
        return Err(LayoutError::HasChildren(id.clone()));
    }
    Ok(i)
}

fn require_root(scene: &SceneState, id: &InstanceId) -> Result<usize, LayoutError> {
    let i = index(scene, id)?;
    let roots = root_indices(scene)?;
    if roots[i] != i {
        return Err(LayoutError::NotAClusterRoot(id.clone()));
    }
    Ok(i)
}

fn apply_inner(scene: &mut SceneState, action: &Action, mode: CheckMode) -> Result<Result<(), RevertReason>, LayoutError> {
    let changed: Vec<usize> = match action {
        Action::Add { category, dims, placement } => {
            check_dims(scene, category, *dims)?;
            if let Some(p) = placement.parent() {
                index(scene, p)?;
            }
            let Some((pose, relation)) = realize(scene, category, *dims, placement) else {
                return Ok(Err(RevertReason::NoFit));
            };
            let id = scene.mint_id(category);
            scene.instances.push(ObjectInstance { id, category: category.clone(), pose, dims: *dims, relation });
            vec![scene.instances.len() - 1]
        }
        Action::Delete { target } => {
            let i = index(scene, target)?;
            let mut doomed = subtree(scene, i);
            doomed.sort_unstable();
            for &k in doomed.iter().rev() {
                scene.instances.remove(k);
            }
            Vec::new()
        }
        Action::Resample { target, dims } => {
            let i = require_leaf(scene, target)?;
            check_dims(scene, &scene.instances[i].category.clone(), *dims)?;
            let Some(p) = placement_of(scene, &scene.instances[i]) else { return Ok(Err(RevertReason::NoFit)) };
            scene.instances[i].dims = *dims;
            if !set_placement(scene, i, &p) {
                return Ok(Err(RevertReason::NoFit));
            }
            vec![i]
        }
        Action::Translate { target, delta } => {
            let i = require_leaf(scene, target)?;
            let inst = &scene.instances[i];
            let moved = Pose { x: inst.pose.x + delta.x, y: inst.pose.y + delta.y, ..inst.pose };
            let Some(p) = placement_at(scene, inst, &moved) else { return Ok(Err(RevertReason::NoFit)) };
            if !set_placement(scene, i, &p) {
                return Ok(Err(RevertReason::NoFit));
            }
            vec![i]
        }
        Action::Rotate { target, yaw } => {
            let i = require_leaf(scene, target)?;
            let inst = &scene.instances[i];
            let p = match placement_of(scene, inst) {
                Some(Placement::Free { x, y, .. }) => Placement::Free { x, y, yaw: *yaw },
                Some(Placement::Stacked { kind, parent, slot, u, v, .. }) => {
                    let py = scene.get(&parent).map(|p| p.pose.yaw).unwrap_or(0.0);
                    let flip = crate::geometry::normalize_angle(yaw - py).abs() > std::f64::consts::FRAC_PI_2;
                    Placement::Stacked { kind, parent, slot, u, v, flip }
                }
                Some(Placement::Front { parent, t, gap, .. }) => {
                    let py = scene.get(&parent).map(|p| p.pose.yaw).unwrap_or(0.0);
                    let facing = Vec2::from_angle(yaw - py);
                    let side = ((-facing).angle() / std::f64::consts::FRAC_PI_2).round().rem_euclid(4.0) as u8;
                    Placement::Front { parent, side, t, gap }
                }
                Some(Placement::Wall { .. }) => return Err(LayoutError::IllegalAction("rotate on a wall-attached instance")),
                None => return Ok(Err(RevertReason::NoFit)),
            };
            if !set_placement(scene, i, &p) {
                return Ok(Err(RevertReason::NoFit));
            }
            vec![i]
        }
        Action::ChangeRelationPlane { target, slot } => {
            let i = require_leaf(scene, target)?;
            let p = match placement_of(scene, &scene.instances[i]) {
                Some(Placement::Stacked { kind: RelationKind::OnSurfaceOf, parent, u, v, flip, .. }) => {
                    Placement::Stacked { kind: RelationKind::OnSurfaceOf, parent, slot: *slot, u, v, flip }
                }
                _ => return Err(LayoutError::IllegalAction("change_relation_plane needs an on_surface_of child")),
            };
            if !set_placement(scene, i, &p) {
                return Ok(Err(RevertReason::NoFit));
            }
            vec![i]
        }
        Action::ChangeRelationTarget { target, parent } => {
            let i = require_leaf(scene, target)?;
            let current = placement_of(scene, &scene.instances[i]);
            let p = match (current, parent) {
                (Some(Placement::Wall { kind, t, gap, .. }), RelationTarget::Wall(w)) => {
                    if scene.room.wall(*w).is_none() {
                        return Err(LayoutError::IllegalAction("wall index out of range"));
                    }
                    Placement::Wall { kind, wall: *w, t, gap }
                }
                (Some(Placement::Front { side, t, gap, .. }), RelationTarget::Instance(pid)) => {
                    Placement::Front { parent: pid.clone(), side, t, gap }
                }
                (Some(Placement::Stacked { kind, slot, u, v, flip, .. }), RelationTarget::Instance(pid)) => {
                    Placement::Stacked { kind, parent: pid.clone(), slot, u, v, flip }
                }
                _ => return Err(LayoutError::IllegalAction("relation target must match the relation kind")),
            };
            if let RelationTarget::Instance(pid) = parent {
                let pi = index(scene, pid)?;
                if pi == i || subtree(scene, i).contains(&pi) {
                    return Err(LayoutError::CyclicRelations(pid.clone()));
                }
            }
            if !set_placement(scene, i, &p) {
                return Ok(Err(RevertReason::NoFit));
            }
            vec![i]
        }
        Action::Swap { a, b } => {
            let ia = require_leaf(scene, a)?;
            let ib = require_leaf(scene, b)?;
            if ia == ib {
                return Err(LayoutError::IllegalAction("swap needs two distinct instances"));
            }
            let (Some(pa), Some(pb)) = (placement_of(scene, &scene.instances[ia]), placement_of(scene, &scene.instances[ib]))
            else {
                return Ok(Err(RevertReason::NoFit));
            };
            if pa.parent() == Some(b) || pb.parent() == Some(a) {
                return Err(LayoutError::IllegalAction("cannot swap a child with its parent"));
            }
            if !set_placement(scene, ia, &pb) || !set_placement(scene, ib, &pa) {
                return Ok(Err(RevertReason::NoFit));
            }
            vec![ia, ib]
        }
        Action::ResampleCluster { root, dims } => {
            let r = require_root(scene, root)?;
            let order = subtree(scene, r);
            let placements: Vec<Option<Placement>> = order.iter().map(|&i| placement_of(scene, &scene.instances[i])).collect();
            for (id, d) in dims {
                let i = index(scene, id)?;
                if !order.contains(&i) {
                    return Err(LayoutError::IllegalAction("resample_cluster dims must name cluster members"));
                }
                check_dims(scene, &scene.instances[i].category.clone(), *d)?;
                scene.instances[i].dims = *d;
            }
            let Some(root_p) = &placements[0] else { return Ok(Err(RevertReason::NoFit)) };
            if !set_placement(scene, r, root_p) || !reseat(scene, &order, &placements) {
                return Ok(Err(RevertReason::NoFit));
            }
            order
        }
        Action::TranslateCluster { root, delta } => {
            let r = require_root(scene, root)?;
            let order = subtree(scene, r);
            for &i in &order {
                scene.instances[i].pose.x += delta.x;
                scene.instances[i].pose.y += delta.y;
            }
            order
        }
        Action::RotateCluster { root, angle } => {
            let r = require_root(scene, root)?;
            let order = subtree(scene, r);
            let pivot = scene.instances[r].pose.position();
            for &i in &order {
                let p = &mut scene.instances[i].pose;
                let c = pivot + (Vec2::new(p.x, p.y) - pivot).rotated(*angle);
                p.x = c.x;
                p.y = c.y;
                p.yaw = crate::geometry::normalize_angle(p.yaw + angle);
            }
            order
        }
    };
    Ok(check_feasible(scene, &changed, mode))
}
