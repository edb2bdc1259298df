//! Reference implementations used as test oracles. Each recomputes its
//! quantity from poses, dimensions and camera parameters directly instead of
//! going through the library routine it checks.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roomgen::constraints::relations::relation_holds;
use roomgen::geometry::{BoolGrid, CameraIntrinsics, CameraPose, Cell, OrientedBox};
use roomgen::planner::Trajectory;
use roomgen::scene::{InstanceId, ObjectInstance, RelationKind, RelationTarget};
use roomgen::taskgen::{Answer, Measure, QATask, TaskFamily};
use roomgen::SceneState;

type P2 = (f64, f64);
type P3 = [f64; 3];

// ---------------------------------------------------------------- footprints

/// Footprint corners, counter-clockwise.
pub fn corners2(inst: &ObjectInstance) -> [P2; 4] {
    let (s, c) = inst.pose.yaw.sin_cos();
    let (hx, hy) = (inst.dims.x / 2.0, inst.dims.y / 2.0);
    [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)].map(|(u, v)| (inst.pose.x + c * u - s * v, inst.pose.y + s * u + c * v))
}

pub fn shoelace(p: &[P2]) -> f64 {
    let n = p.len();
    (0..n).map(|i| p[i].0 * p[(i + 1) % n].1 - p[(i + 1) % n].0 * p[i].1).sum::<f64>() / 2.0
}

/// Sutherland-Hodgman clip of `subject` by the convex counter-clockwise `clip`.
pub fn clip_convex(subject: &[P2], clip: &[P2]) -> Vec<P2> {
    let mut out = subject.to_vec();
    for k in 0..clip.len() {
        let (a, b) = (clip[k], clip[(k + 1) % clip.len()]);
        let side = |p: P2| (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let (p, q) = (input[i], input[(i + 1) % input.len()]);
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push((p.0 + (q.0 - p.0) * t, p.1 + (q.1 - p.1) * t));
            }
        }
        if out.is_empty() {
            break;
        }
    }
    out
}

fn point_in_polygon(poly: &[P2], p: P2, tol: f64) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
        if (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy) <= tol {
            return true;
        }
        if (a.1 > p.1) != (b.1 > p.1) && p.0 < a.0 + (p.1 - a.1) / (b.1 - a.1) * dx {
            inside = !inside;
        }
    }
    inside
}

fn resting_chain(scene: &SceneState, i: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = i;
    while let Some(rel) = &scene.instances[cur].relation {
        if !matches!(rel.kind, RelationKind::OnTopOf | RelationKind::OnSurfaceOf) {
            break;
        }
        let RelationTarget::Instance(pid) = &rel.target else { break };
        let Some(p) = scene.instances.iter().position(|x| &x.id == pid) else { break };
        if p == i || out.contains(&p) {
            break;
        }
        out.push(p);
        cur = p;
    }
    out
}

/// Out-of-boundary instances and interpenetrating pairs, by point-in-polygon
/// and polygon clipping. Overlaps thinner than about a millimetre are ignored.
pub fn artifacts(scene: &SceneState) -> (usize, usize) {
    let room: Vec<P2> = scene.room.floor_polygon.iter().map(|p| (p.x, p.y)).collect();
    let ob = scene
        .instances
        .iter()
        .filter(|i| i.pose.z + i.dims.z > scene.room.wall_height + 1e-9 || !corners2(i).iter().all(|&c| point_in_polygon(&room, c, 1e-9)))
        .count();
    let chains: Vec<Vec<usize>> = (0..scene.len()).map(|i| resting_chain(scene, i)).collect();
    let mut cn = 0;
    for i in 0..scene.len() {
        for j in i + 1..scene.len() {
            if chains[i].contains(&j) || chains[j].contains(&i) {
                continue;
            }
            let (a, b) = (&scene.instances[i], &scene.instances[j]);
            let z = (a.pose.z + a.dims.z).min(b.pose.z + b.dims.z) - a.pose.z.max(b.pose.z);
            if z > 1e-6 && shoelace(&clip_convex(&corners2(a), &corners2(b))) > 1e-5 {
                cn += 1;
            }
        }
    }
    (ob, cn)
}

/// Summed footprint area over floor area; exact when footprints do not overlap.
pub fn analytic_occupancy(scene: &SceneState) -> f64 {
    let room: Vec<P2> = scene.room.floor_polygon.iter().map(|p| (p.x, p.y)).collect();
    scene.instances.iter().map(|i| i.dims.x * i.dims.y).sum::<f64>() / shoelace(&room)
}

// ---------------------------------------------------------------- paths

/// Uniform-cost search over 8-connected cells, every move allowed between
/// accessible neighbours. Returns `(straight, diagonal)` step counts per reached cell.
pub fn ucs(grid: &BoolGrid, start: Cell) -> BTreeMap<Cell, (u32, u32)> {
    let (cols, rows) = (grid.spec.cols as i64, grid.spec.rows as i64);
    let open = |c: (i64, i64)| c.0 >= 0 && c.1 >= 0 && c.0 < cols && c.1 < rows && grid.cells[(c.1 * cols + c.0) as usize];
    let value = |(s, d): (u32, u32)| s as f64 + d as f64 * SQRT_2;
    let mut closed: BTreeMap<Cell, (u32, u32)> = BTreeMap::new();
    if !open((start.0 as i64, start.1 as i64)) {
        return closed;
    }
    let mut frontier: Vec<((u32, u32), (i64, i64))> = vec![((0, 0), (start.0 as i64, start.1 as i64))];
    while !frontier.is_empty() {
        let k = (0..frontier.len()).min_by(|&a, &b| value(frontier[a].0).total_cmp(&value(frontier[b].0))).unwrap();
        let (cost, c) = frontier.swap_remove(k);
        let cell = (c.0 as usize, c.1 as usize);
        if closed.contains_key(&cell) {
            continue;
        }
        closed.insert(cell, cost);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let n = (c.0 + dx, c.1 + dy);
                if (dx, dy) == (0, 0) || !open(n) || closed.contains_key(&(n.0 as usize, n.1 as usize)) {
                    continue;
                }
                let next = if dx != 0 && dy != 0 { (cost.0, cost.1 + 1) } else { (cost.0 + 1, cost.1) };
                frontier.push((next, n));
            }
        }
    }
    closed
}

// ---------------------------------------------------------------- cameras

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// (right, up, forward) for a zero-roll camera.
fn basis(pose: &CameraPose) -> [P3; 3] {
    let (sy, cy) = pose.yaw.sin_cos();
    let (sp, cp) = pose.pitch.sin_cos();
    let f = [cp * cy, cp * sy, sp];
    let r = [sy, -cy, 0.0];
    [r, cross(r, f), f]
}

fn to_camera(pose: &CameraPose, p: P3) -> P3 {
    let [r, u, f] = basis(pose);
    let d = sub(p, [pose.x, pose.y, pose.z]);
    [dot(d, r), dot(d, u), dot(d, f)]
}

fn box_corners(b: &OrientedBox) -> Vec<P3> {
    let (s, c) = b.yaw.sin_cos();
    let h = b.half_extents;
    let mut out = Vec::with_capacity(8);
    for sz in [-1.0, 1.0] {
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            let (u, v) = (sx * h.x, sy * h.y);
            out.push([b.center.x + c * u - s * v, b.center.y + s * u + c * v, b.center.z + sz * h.z]);
        }
    }
    out
}

/// Whether any corner or edge-third point of the instance box falls in the view frustum.
pub fn sees(pose: &CameraPose, intr: &CameraIntrinsics, inst: &ObjectInstance) -> bool {
    let (s, c) = inst.pose.yaw.sin_cos();
    let (hx, hy, hz) = (inst.dims.x / 2.0, inst.dims.y / 2.0, inst.dims.z / 2.0);
    let zc = inst.pose.z + hz;
    let corner = |sx: f64, sy: f64, sz: f64| {
        let (u, v) = (sx * hx, sy * hy);
        [inst.pose.x + c * u - s * v, inst.pose.y + s * u + c * v, zc + sz * hz]
    };
    let signs = [-1.0, 1.0];
    let mut pts = Vec::new();
    for &a in &signs {
        for &b in &signs {
            for &d in &signs {
                let p = corner(a, b, d);
                pts.push(p);
                // each edge once, from its lexicographically smaller end
                for q in [corner(-a, b, d), corner(a, -b, d), corner(a, b, -d)] {
                    if lex_less(p, q) {
                        for t in [1.0 / 3.0, 2.0 / 3.0] {
                            pts.push([p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t, p[2] + (q[2] - p[2]) * t]);
                        }
                    }
                }
            }
        }
    }
    let (th, tv) = ((intr.horizontal_fov / 2.0).tan(), (intr.vertical_fov / 2.0).tan());
    pts.iter().any(|&p| {
        let q = to_camera(pose, p);
        q[2] > 1e-9 && q[0].abs() <= q[2] * th + 1e-12 && q[1].abs() <= q[2] * tv + 1e-12
    })
}

fn lex_less(a: P3, b: P3) -> bool {
    a.partial_cmp(&b) == Some(std::cmp::Ordering::Less)
}

/// Entry distance of a ray into a box, by slabs in the box frame.
fn ray_box(o: P3, d: P3, b: &OrientedBox) -> Option<f64> {
    let (s, c) = b.yaw.sin_cos();
    let rel = sub(o, [b.center.x, b.center.y, b.center.z]);
    let lo = [c * rel[0] + s * rel[1], -s * rel[0] + c * rel[1], rel[2]];
    let ld = [c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]];
    let h = [b.half_extents.x, b.half_extents.y, b.half_extents.z];
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..3 {
        if ld[k].abs() < 1e-15 {
            if lo[k].abs() > h[k] {
                return None;
            }
            continue;
        }
        let (a, b2) = ((-h[k] - lo[k]) / ld[k], (h[k] - lo[k]) / ld[k]);
        t0 = t0.max(a.min(b2));
        t1 = t1.min(a.max(b2));
    }
    (t0 <= t1 && t1 > 0.0).then_some(t0.max(0.0))
}

/// Occlusion of `target` estimated from `rays` rays through uniformly random
/// image-plane points inside the target's projected bounds: the share of rays
/// that reach the target when it is alone but hit something else first in the
/// full scene.
pub fn ray_occlusion(scene: &SceneState, pose: &CameraPose, intr: &CameraIntrinsics, target: &InstanceId, rays: usize, seed: u64) -> f64 {
    let parts: Vec<(bool, Vec<OrientedBox>)> =
        scene.instances.iter().map(|i| (&i.id == target, i.part_boxes(scene.parts_of(i)))).collect();
    let (th, tv) = ((intr.horizontal_fov / 2.0).tan(), (intr.vertical_fov / 2.0).tan());
    let mut bounds = (1.0f64, -1.0f64, 1.0f64, -1.0f64);
    let mut behind = false;
    for (is_t, boxes) in &parts {
        if !is_t {
            continue;
        }
        for b in boxes {
            for p in box_corners(b) {
                let q = to_camera(pose, p);
                if q[2] <= 1e-3 {
                    behind = true;
                    continue;
                }
                let (x, y) = (q[0] / (q[2] * th), q[1] / (q[2] * tv));
                bounds = (bounds.0.min(x), bounds.1.max(x), bounds.2.min(y), bounds.3.max(y));
            }
        }
    }
    let (x0, x1, y0, y1) = if behind { (-1.0, 1.0, -1.0, 1.0) } else { (bounds.0.max(-1.0), bounds.1.min(1.0), bounds.2.max(-1.0), bounds.3.min(1.0)) };
    if x0 >= x1 || y0 >= y1 {
        return 1.0;
    }
    let [r, u, f] = basis(pose);
    let o = [pose.x, pose.y, pose.z];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut alone, mut seen) = (0usize, 0usize);
    for _ in 0..rays {
        let (nx, ny) = (rng.gen_range(x0..x1) * th, rng.gen_range(y0..y1) * tv);
        let d = [f[0] + r[0] * nx + u[0] * ny, f[1] + r[1] * nx + u[1] * ny, f[2] + r[2] * nx + u[2] * ny];
        let hit = |want: bool| {
            parts
                .iter()
                .filter(|(is_t, _)| *is_t == want)
                .flat_map(|(_, bs)| bs.iter().filter_map(|b| ray_box(o, d, b)))
                .filter(|t| *t >= 1e-3)
                .fold(f64::INFINITY, f64::min)
        };
        let t_target = hit(true);
        if t_target.is_finite() {
            alone += 1;
            if t_target < hit(false) {
                seen += 1;
            }
        }
    }
    if alone == 0 {
        1.0
    } else {
        1.0 - seen as f64 / alone as f64
    }
}

// ---------------------------------------------------------------- tasks

fn phrase(kind: RelationKind) -> &'static str {
    match kind {
        RelationKind::OnTopOf => "on top of",
        RelationKind::AgainstWall => "against",
        RelationKind::FrontAgainst => "in front of",
        RelationKind::FlushWall => "flush with",
        RelationKind::OnSurfaceOf => "on",
    }
}

/// Every phrase that describes instance `i`: its bare category, plus its
/// declared relation when that relation currently holds.
fn descriptions(scene: &SceneState, i: usize) -> Vec<String> {
    let inst = &scene.instances[i];
    let noun = inst.category.replace('_', " ");
    let mut out = vec![format!("the {noun}")];
    if let Some(rel) = &inst.relation {
        if relation_holds(scene, inst) {
            let target = match &rel.target {
                RelationTarget::Wall(_) => Some("the wall".to_string()),
                RelationTarget::Instance(p) => scene.get(p).map(|x| format!("the {}", x.category.replace('_', " "))),
            };
            if let Some(t) = target {
                out.push(format!("the {noun} {} {t}", phrase(rel.kind)));
            }
        }
    }
    out
}

/// The single instance an expression picks out, if exactly one does.
pub fn resolve(scene: &SceneState, expression: &str) -> Option<InstanceId> {
    let hits: Vec<usize> = (0..scene.len()).filter(|&i| descriptions(scene, i).iter().any(|d| d == expression)).collect();
    (hits.len() == 1).then(|| scene.instances[hits[0]].id.clone())
}

/// Ground truth re-derived from the scene and trajectory alone. `None` when
/// the task's referents no longer resolve.
pub fn replay(task: &QATask, scene: &SceneState, traj: &Trajectory) -> Option<Answer> {
    let ids: Option<Vec<InstanceId>> = task.provenance.referents.iter().map(|r| resolve(scene, &r.expression)).collect();
    let ids = ids?;
    let get = |id: &InstanceId| scene.instances.iter().find(|x| &x.id == id);
    match task.family {
        TaskFamily::Measurement => {
            let a = get(ids.first()?)?;
            match task.provenance.measure? {
                Measure::Height => Some(Answer::Number(a.dims.z)),
                Measure::Distance => {
                    let b = get(ids.get(1)?)?;
                    let c = |x: &ObjectInstance| [x.pose.x, x.pose.y, x.pose.z + 0.5 * x.dims.z];
                    let d = sub(c(a), c(b));
                    Some(Answer::Number(dot(d, d).sqrt()))
                }
            }
        }
        TaskFamily::PerspectiveCounting => {
            let cat = task.provenance.category.as_deref()?;
            if !task.question.contains(&cat.replace('_', " ")) {
                return None;
            }
            let frames: Vec<&CameraPose> = traj.legs.iter().flat_map(|l| &l.frames).collect();
            let n = scene
                .instances
                .iter()
                .filter(|i| i.category == cat && frames.iter().any(|p| sees(p, &traj.params.intrinsics, i)))
                .count();
            Some(Answer::Number(n as f64))
        }
        TaskFamily::SpatiotemporalOrder => {
            let mut visits: Vec<(usize, &str)> = Vec::new();
            for (id, r) in ids.iter().zip(&task.provenance.referents) {
                visits.push((traj.legs.iter().position(|l| &l.target == id)?, r.expression.as_str()));
            }
            visits.sort();
            let truth = visits.iter().map(|v| v.1).collect::<Vec<_>>().join(", then ");
            let k = task.choices.as_ref()?.iter().position(|c| *c == truth)?;
            Some(Answer::Choice(["A", "B", "C", "D"].get(k)?.to_string()))
        }
    }
}
