//! Movable clusters: a root instance plus everything resting on or facing it.

use serde::{Deserialize, Serialize};

use super::LayoutError;
use crate::geometry::{OrientedBox, Vec3};
use crate::scene::{InstanceId, SceneState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub root: InstanceId,
    /// Members other than the root, in scene order.
    pub children: Vec<InstanceId>,
    pub collective_box: OrientedBox,
}

impl Cluster {
    pub fn members(&self) -> impl Iterator<Item = &InstanceId> {
        std::iter::once(&self.root).chain(self.children.iter())
    }

    pub fn len(&self) -> usize {
        1 + self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Index of the stable-against parent of instance `i`, if any.
fn stable_parent(scene: &SceneState, i: usize) -> Result<Option<usize>, LayoutError> {
    let inst = &scene.instances[i];
    match &inst.relation {
        Some(rel) if rel.kind.is_stable_against() => match rel.parent() {
            Some(pid) => scene
                .index_of(pid)
                .map(Some)
                .ok_or_else(|| LayoutError::UnknownTarget(pid.clone())),
            None => Ok(None),
        },
        _ => Ok(None),
    }
}

/// Root index for every instance, following stable-against relations upward.
pub fn root_indices(scene: &SceneState) -> Result<Vec<usize>, LayoutError> {
    let n = scene.instances.len();
    let parents: Vec<Option<usize>> = (0..n).map(|i| stable_parent(scene, i)).collect::<Result<_, _>>()?;
    (0..n)
        .map(|i| {
            let mut cur = i;
            for _ in 0..=n {
                match parents[cur] {
                    Some(p) => cur = p,
                    None => return Ok(cur),
                }
            }
            Err(LayoutError::CyclicRelations(scene.instances[i].id.clone()))
        })
        .collect()
}

/// Axis-aligned bounds of `boxes` in the frame of `frame` (yaw only), as a world box.
pub fn collective_box(frame: &OrientedBox, boxes: &[OrientedBox]) -> OrientedBox {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for b in boxes {
        for c in b.corners() {
            let l = frame.to_local(c);
            lo = Vec3::new(lo.x.min(l.x), lo.y.min(l.y), lo.z.min(l.z));
            hi = Vec3::new(hi.x.max(l.x), hi.y.max(l.y), hi.z.max(l.z));
        }
    }
    let center = frame.to_world((lo + hi) * 0.5);
    OrientedBox::new(center, (hi - lo) * 0.5, frame.yaw)
}

/// Partitions the scene into clusters, ordered by root position in the scene.
pub fn identify_clusters(scene: &SceneState) -> Result<Vec<Cluster>, LayoutError> {
    let roots = root_indices(scene)?;
    let mut out = Vec::new();
    for (r, inst) in scene.instances.iter().enumerate() {
        if roots[r] != r {
            continue;
        }
        let members: Vec<usize> = (0..scene.instances.len()).filter(|&i| roots[i] == r).collect();
        let frame = inst.bbox();
        let boxes: Vec<OrientedBox> = members.iter().map(|&i| scene.instances[i].bbox()).collect();
        out.push(Cluster {
            root: inst.id.clone(),
            children: members.iter().filter(|&&i| i != r).map(|&i| scene.instances[i].id.clone()).collect(),
            collective_box: collective_box(&frame, &boxes),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RoomSpec;
    use crate::scene::{ObjectInstance, Pose, Relation, RelationKind, RelationTarget};

    fn inst(id: &str, x: f64, y: f64, rel: Option<(RelationKind, &str)>) -> ObjectInstance {
        ObjectInstance {
            id: id.into(),
            category: "thing".into(),
            pose: Pose { x, y, z: 0.0, yaw: 0.4 },
            dims: Vec3::new(0.4, 0.4, 0.5),
            relation: rel.map(|(kind, p)| Relation { kind, target: RelationTarget::Instance(p.into()), slot: None }),
        }
    }

    #[test]
    fn table_chairs_and_cup() {
        let mut s = SceneState::new(RoomSpec::rectangle(6.0, 5.0, 2.8));
        s.instances = vec![
            inst("table", 3.0, 2.5, None),
            inst("c1", 2.0, 2.5, Some((RelationKind::FrontAgainst, "table"))),
            inst("c2", 4.0, 2.5, Some((RelationKind::FrontAgainst, "table"))),
            inst("c3", 3.0, 1.5, Some((RelationKind::FrontAgainst, "table"))),
            inst("c4", 3.0, 3.5, Some((RelationKind::FrontAgainst, "table"))),
            inst("cup", 3.0, 2.5, Some((RelationKind::OnTopOf, "table"))),
        ];
        let cs = identify_clusters(&s).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].root.as_str(), "table");
        assert_eq!(cs[0].len(), 6);
    }

    #[test]
    fn wall_relations_do_not_bind() {
        let mut s = SceneState::new(RoomSpec::rectangle(6.0, 5.0, 2.8));
        let mut w = inst("w0", 1.0, 1.0, None);
        w.relation = Some(Relation { kind: RelationKind::AgainstWall, target: RelationTarget::Wall(0), slot: None });
        s.instances = vec![w, inst("w1", 3.0, 1.0, None), inst("w2", 5.0, 1.0, None)];
        assert_eq!(identify_clusters(&s).unwrap().len(), 3);
    }

    #[test]
    fn chain_collapses_to_one_root() {
        let mut s = SceneState::new(RoomSpec::rectangle(6.0, 5.0, 2.8));
        s.instances = vec![
            inst("cup", 3.0, 2.5, Some((RelationKind::OnTopOf, "plate"))),
            inst("plate", 3.0, 2.5, Some((RelationKind::OnTopOf, "table"))),
            inst("table", 3.0, 2.5, None),
        ];
        let cs = identify_clusters(&s).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].root.as_str(), "table");
        assert_eq!(cs[0].children, vec![InstanceId::from("cup"), InstanceId::from("plate")]);
    }

    #[test]
    fn cycles_are_rejected() {
        let mut s = SceneState::new(RoomSpec::rectangle(6.0, 5.0, 2.8));
        s.instances = vec![
            inst("a", 1.0, 1.0, Some((RelationKind::OnTopOf, "b"))),
            inst("b", 1.0, 1.0, Some((RelationKind::OnTopOf, "a"))),
        ];
        assert!(matches!(identify_clusters(&s), Err(LayoutError::CyclicRelations(_))));
    }

    #[test]
    fn collective_box_contains_member_corners() {
        let mut s = SceneState::new(RoomSpec::rectangle(6.0, 5.0, 2.8));
        s.instances = vec![inst("t", 3.0, 2.5, None), inst("c", 2.4, 2.9, Some((RelationKind::FrontAgainst, "t")))];
        s.instances[1].pose.yaw = 1.3;
        let cs = identify_clusters(&s).unwrap();
        let cb = &cs[0].collective_box;
        for i in &s.instances {
            for c in i.bbox().corners() {
                let l = cb.to_local(c);
                assert!(l.x.abs() <= cb.half_extents.x + 1e-9 && l.y.abs() <= cb.half_extents.y + 1e-9 && l.z.abs() <= cb.half_extents.z + 1e-9);
            }
        }
    }
}
