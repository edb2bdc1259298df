//! Out-of-boundary and collision counting.

use crate::geometry::{contained_in_room, OrientedBox};
use crate::scene::SceneState;

/// For each instance, the indices of instances it rests on, directly or through
/// a chain of stacking relations. Resting contact is not a collision.
pub fn stacking_ancestors(scene: &SceneState) -> Vec<Vec<usize>> {
    let n = scene.instances.len();
    (0..n)
        .map(|i| {
            let mut out = Vec::new();
            let mut cur = i;
            while let Some(rel) = &scene.instances[cur].relation {
                if !rel.kind.is_stacking() {
                    break;
                }
                let Some(p) = rel.parent().and_then(|pid| scene.index_of(pid)) else { break };
                if p == i || out.contains(&p) {
                    break;
                }
                out.push(p);
                cur = p;
            }
            out
        })
        .collect()
}

pub fn exempt(ancestors: &[Vec<usize>], a: usize, b: usize) -> bool {
    ancestors[a].contains(&b) || ancestors[b].contains(&a)
}

/// Indices of instances that are not contained in the room.
pub fn out_of_boundary(scene: &SceneState) -> Vec<usize> {
    scene
        .instances
        .iter()
        .enumerate()
        .filter(|(_, i)| !contained_in_room(&i.bbox(), &scene.room))
        .map(|(k, _)| k)
        .collect()
}

fn aabb(b: &OrientedBox) -> [f64; 6] {
    let fp = b.footprint();
    let mut r = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, b.bottom(), b.top()];
    for p in fp {
        r[0] = r[0].min(p.x);
        r[1] = r[1].max(p.x);
        r[2] = r[2].min(p.y);
        r[3] = r[3].max(p.y);
    }
    r
}

/// Colliding instance pairs `(i, j)` with `i < j`, sorted; found by sweep and prune on x.
pub fn collision_pairs(scene: &SceneState) -> Vec<(usize, usize)> {
    let boxes: Vec<OrientedBox> = scene.instances.iter().map(|i| i.bbox()).collect();
    let anc = stacking_ancestors(scene);
    let bounds: Vec<[f64; 6]> = boxes.iter().map(aabb).collect();
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| bounds[a][0].total_cmp(&bounds[b][0]).then(a.cmp(&b)));
    let mut active: Vec<usize> = Vec::new();
    let mut pairs = Vec::new();
    for &i in &order {
        let bi = &bounds[i];
        active.retain(|&j| bounds[j][1] >= bi[0]);
        for &j in &active {
            let bj = &bounds[j];
            if bj[2] > bi[3] || bi[2] > bj[3] || bj[4] > bi[5] || bi[4] > bj[5] {
                continue;
            }
            if !exempt(&anc, i, j) && boxes[i].intersects(&boxes[j]) {
                pairs.push((i.min(j), i.max(j)));
            }
        }
        active.push(i);
    }
    pairs.sort_unstable();
    pairs
}

/// Quadratic reference implementation of [`collision_pairs`].
pub fn collision_pairs_brute(scene: &SceneState) -> Vec<(usize, usize)> {
    let boxes: Vec<OrientedBox> = scene.instances.iter().map(|i| i.bbox()).collect();
    let anc = stacking_ancestors(scene);
    let mut pairs = Vec::new();
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if !exempt(&anc, i, j) && boxes[i].intersects(&boxes[j]) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}
