//! Object-covering camera trajectories: nearest unvisited target, sampled
//! viewpoints validated for accessibility, framing and occlusion, and grid
//! paths between consecutive viewpoints.

mod dijkstra;

pub use dijkstra::{dijkstra_path, shortest_path_tree, PathCost, PathError};

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::grid::{DEFAULT_ACCESS_RESOLUTION, DEFAULT_CLEARANCE};
use crate::geometry::{
    accessible_grid, fov_containment, normalize_angle, occlusion_rate, BoolGrid, CameraIntrinsics, CameraPose, GeometryError,
    GridSpec, Vec2,
};
use crate::scene::{InstanceId, SceneState};

pub const TRAJECTORY_SCHEMA: &str = "trajectory/1";
/// Inner radius of the viewpoint sampling annulus.
pub const MIN_VIEW_DISTANCE: f64 = 0.5;
pub const EGO_HEIGHT: f64 = 1.0;
pub const BEV_HEIGHT: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryParams {
    pub max_sampling_times: u32,
    pub max_distance: f64,
    pub fov_threshold: f64,
    pub occlusion_required_range: (f64, f64),
    pub camera_height: f64,
    pub intrinsics: CameraIntrinsics,
    pub grid_resolution: f64,
    pub clearance: f64,
    /// Spacing of interpolated frames along paths.
    pub frame_spacing: f64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            max_sampling_times: 64,
            max_distance: 4.0,
            fov_threshold: 0.95,
            occlusion_required_range: (0.0, 0.1),
            camera_height: EGO_HEIGHT,
            intrinsics: CameraIntrinsics::default(),
            grid_resolution: DEFAULT_ACCESS_RESOLUTION,
            clearance: DEFAULT_CLEARANCE,
            frame_spacing: 0.25,
        }
    }
}

impl TrajectoryParams {
    pub fn with_height(height: f64) -> Self {
        Self { camera_height: height, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::InvalidParams(m.to_string()));
        let (lo, hi) = self.occlusion_required_range;
        if self.max_sampling_times == 0 {
            return bad("max_sampling_times must be at least 1");
        }
        if !(self.max_distance > 0.0 && self.max_distance.is_finite()) {
            return bad("max_distance must be positive");
        }
        if !(self.fov_threshold > 0.0 && self.fov_threshold <= 1.0) {
            return bad("fov_threshold must lie in (0,1]");
        }
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return bad("occlusion_required_range must be an ordered interval within [0,1]");
        }
        if !(self.camera_height > 0.0 && self.camera_height.is_finite()) {
            return bad("camera_height must be positive");
        }
        if !(self.frame_spacing > 0.0) {
            return bad("frame_spacing must be positive");
        }
        self.intrinsics.validate()?;
        Ok(())
    }

    fn occlusion_ok(&self, occ: f64) -> bool {
        let (lo, hi) = self.occlusion_required_range;
        lo <= occ && occ <= hi
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("door cell is not accessible")]
    DoorInaccessible,
    #[error("invalid trajectory parameters: {0}")]
    InvalidParams(String),
    #[error("unknown target {0}")]
    UnknownTarget(InstanceId),
    #[error("no targets to choose from")]
    NoTargets,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Result of checking one candidate viewpoint. Checks run in order
/// (accessibility, framing, occlusion) and later ones are skipped once one fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewpointEvaluation {
    pub pose: CameraPose,
    pub accessible: bool,
    pub fov_percent: Option<f64>,
    pub occlusion: Option<f64>,
    pub accepted: bool,
}

impl ViewpointEvaluation {
    /// Ordering key for picking the most promising rejected sample.
    fn rank(&self) -> (u8, f64, f64) {
        let occ = self.occlusion.map_or(f64::INFINITY, |o| o);
        (self.accessible as u8, self.fov_percent.unwrap_or(0.0), -occ)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub target: InstanceId,
    pub evaluation: ViewpointEvaluation,
    /// Number of viewpoints sampled for this target, the accepted one included.
    pub attempts: u32,
    /// Grid cell centers from the previous viewpoint's cell to this one's.
    pub path: Vec<Vec2>,
    pub path_cost: f64,
    /// Interpolated camera poses along the path, ending at the viewpoint.
    pub frames: Vec<CameraPose>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnreachableReason {
    SamplingBudgetExhausted,
    /// Valid viewpoints exist but none is connected to the current position.
    NoPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unreachable {
    pub target: InstanceId,
    pub reason: UnreachableReason,
    pub attempts: u32,
    pub best: Option<ViewpointEvaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub schema: String,
    pub seed: u64,
    pub params: TrajectoryParams,
    pub grid: GridSpec,
    pub start: CameraPose,
    pub legs: Vec<Leg>,
    pub unreachable: Vec<Unreachable>,
}

impl Trajectory {
    pub fn visit_order(&self) -> Vec<&InstanceId> {
        self.legs.iter().map(|l| &l.target).collect()
    }

    /// Every pose along the trajectory: the start pose, then each leg's frames.
    pub fn all_frames(&self) -> impl Iterator<Item = &CameraPose> {
        std::iter::once(&self.start).chain(self.legs.iter().flat_map(|l| l.frames.iter()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let t: Trajectory = serde_json::from_str(text)?;
        if t.schema != TRAJECTORY_SCHEMA {
            return Err(serde::de::Error::custom(format!("unsupported schema {:?}", t.schema)));
        }
        Ok(t)
    }
}

/// The remaining target whose centroid is nearest to `position` in plan view;
/// ties go to the smaller instance id.
pub fn find_closest_target<'a>(
    position: Vec2,
    remaining: &'a BTreeSet<InstanceId>,
    scene: &SceneState,
) -> Result<&'a InstanceId, PlanError> {
    let mut best: Option<(f64, &InstanceId)> = None;
    for id in remaining {
        let inst = scene.get(id).ok_or_else(|| PlanError::UnknownTarget(id.clone()))?;
        let d = position.distance(inst.centroid().xy());
        // BTreeSet iterates ids in order, so strict `<` keeps the smaller id on ties.
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, id));
        }
    }
    best.map(|b| b.1).ok_or(PlanError::NoTargets)
}

/// Per-target sample stream, independent of visit order and camera height.
fn target_rng(seed: u64, target: &InstanceId) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in target.as_str().bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

/// Uniform sample in the annulus around the target centroid, aimed at the centroid.
pub fn sample_viewpoint<R: Rng>(rng: &mut R, target: &InstanceId, params: &TrajectoryParams, scene: &SceneState) -> Result<CameraPose, PlanError> {
    let c = scene.get(target).ok_or_else(|| PlanError::UnknownTarget(target.clone()))?.centroid();
    let r_max = params.max_distance;
    let r_min = MIN_VIEW_DISTANCE.min(r_max);
    let u: f64 = rng.gen();
    let theta = rng.gen::<f64>() * TAU;
    let r = (r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt();
    let p = c.xy() + Vec2::from_angle(theta) * r;
    Ok(CameraPose::looking_at(p.extend(params.camera_height), c))
}

/// Shared state for evaluating viewpoints in one scene.
pub struct PlanContext<'a> {
    pub scene: &'a SceneState,
    pub params: &'a TrajectoryParams,
    pub grid: BoolGrid,
}

impl<'a> PlanContext<'a> {
    pub fn new(scene: &'a SceneState, params: &'a TrajectoryParams) -> Result<Self, PlanError> {
        params.validate()?;
        let grid = accessible_grid(scene, params.grid_resolution, params.clearance)?;
        Ok(Self { scene, params, grid })
    }

    pub fn evaluate(&self, pose: &CameraPose, target: &InstanceId) -> Result<ViewpointEvaluation, PlanError> {
        let inst = self.scene.get(target).ok_or_else(|| PlanError::UnknownTarget(target.clone()))?;
        let mut ev = ViewpointEvaluation { pose: *pose, accessible: false, fov_percent: None, occlusion: None, accepted: false };
        ev.accessible = self.grid.at_point(Vec2::new(pose.x, pose.y));
        if !ev.accessible {
            return Ok(ev);
        }
        let fov = fov_containment(pose, &self.params.intrinsics, &inst.bbox());
        ev.fov_percent = Some(fov);
        if fov <= self.params.fov_threshold {
            return Ok(ev);
        }
        let occ = occlusion_rate(self.scene, pose, &self.params.intrinsics, target)?;
        ev.occlusion = Some(occ);
        ev.accepted = self.params.occlusion_ok(occ);
        Ok(ev)
    }
}

pub fn evaluate_viewpoint(
    pose: &CameraPose,
    target: &InstanceId,
    params: &TrajectoryParams,
    scene: &SceneState,
) -> Result<ViewpointEvaluation, PlanError> {
    PlanContext::new(scene, params)?.evaluate(pose, target)
}

/// Start pose just inside the door, facing into the room.
fn door_pose(scene: &SceneState, params: &TrajectoryParams, grid: &BoolGrid) -> Result<CameraPose, PlanError> {
    let wall = scene.room.door_wall();
    let n = wall.inward_normal();
    let p = scene.room.door_position + n * (grid.spec.resolution / 2.0);
    if !grid.at_point(p) {
        return Err(PlanError::DoorInaccessible);
    }
    Ok(CameraPose::new(p.x, p.y, params.camera_height, n.angle(), 0.0))
}

fn lerp_angle(a: f64, b: f64, t: f64) -> f64 {
    a + normalize_angle(b - a) * t
}

/// Poses every `spacing` meters along `points`, yaw and pitch blended from
/// `from` to `to` by arc length. The last pose is exactly `to`.
fn interpolate_frames(points: &[Vec2], from: &CameraPose, to: &CameraPose, spacing: f64) -> Vec<CameraPose> {
    let total: f64 = points.windows(2).map(|w| w[0].distance(w[1])).sum();
    let mut frames = Vec::new();
    if total > 0.0 {
        let n = (total / spacing).floor() as usize;
        let mut seg = 0;
        let mut seg_start = 0.0;
        for k in 1..=n {
            let s = k as f64 * spacing;
            if s >= total - 1e-9 {
                break;
            }
            while seg + 2 < points.len() && seg_start + points[seg].distance(points[seg + 1]) < s {
                seg_start += points[seg].distance(points[seg + 1]);
                seg += 1;
            }
            let len = points[seg].distance(points[seg + 1]);
            let p = points[seg].lerp(points[seg + 1], if len > 0.0 { (s - seg_start) / len } else { 0.0 });
            let t = s / total;
            frames.push(CameraPose::new(p.x, p.y, to.z, normalize_angle(lerp_angle(from.yaw, to.yaw, t)), from.pitch + (to.pitch - from.pitch) * t));
        }
    }
    frames.push(*to);
    frames
}

/// Greedy nearest-target tour from the door. Each target gets up to
/// `max_sampling_times` viewpoint samples; the first accepted one that is
/// connected to the current position becomes the next leg.
pub fn plan_trajectory(scene: &SceneState, targets: &[InstanceId], params: &TrajectoryParams, rng_seed: u64) -> Result<Trajectory, PlanError> {
    let ctx = PlanContext::new(scene, params)?;
    for t in targets {
        if scene.get(t).is_none() {
            return Err(PlanError::UnknownTarget(t.clone()));
        }
    }
    let start = door_pose(scene, params, &ctx.grid)?;
    let spec = ctx.grid.spec;
    let mut remaining: BTreeSet<InstanceId> = targets.iter().cloned().collect();
    let mut current = start;
    let mut legs = Vec::new();
    let mut unreachable = Vec::new();
    while !remaining.is_empty() {
        let target = find_closest_target(Vec2::new(current.x, current.y), &remaining, scene)?.clone();
        remaining.remove(&target);
        let from_cell = spec.cell_of(Vec2::new(current.x, current.y)).expect("current pose lies on the grid");
        let tree = shortest_path_tree(&ctx.grid, from_cell)?;
        let mut rng = target_rng(rng_seed, &target);
        let mut best: Option<ViewpointEvaluation> = None;
        let mut saw_valid = false;
        let mut found = None;
        let mut attempts = 0;
        while attempts < params.max_sampling_times {
            attempts += 1;
            let pose = sample_viewpoint(&mut rng, &target, params, scene)?;
            let ev = ctx.evaluate(&pose, &target)?;
            if ev.accepted {
                saw_valid = true;
                let cell = spec.cell_of(Vec2::new(pose.x, pose.y)).expect("accessible pose lies on the grid");
                if let Some((cells, cost)) = tree.path_to(cell) {
                    found = Some((ev, cells, cost));
                    break;
                }
            }
            if best.as_ref().is_none_or(|b| ev.rank() > b.rank()) {
                best = Some(ev);
            }
        }
        match found {
            Some((ev, cells, cost)) => {
                let mut points = vec![Vec2::new(current.x, current.y)];
                points.extend(cells.iter().map(|&c| spec.center(c)));
                points.push(Vec2::new(ev.pose.x, ev.pose.y));
                let frames = interpolate_frames(&points, &current, &ev.pose, params.frame_spacing);
                current = ev.pose;
                legs.push(Leg {
                    target,
                    evaluation: ev,
                    attempts,
                    path: cells.iter().map(|&c| spec.center(c)).collect(),
                    path_cost: cost.meters(spec.resolution),
                    frames,
                });
            }
            None => unreachable.push(Unreachable {
                target,
                reason: if saw_valid { UnreachableReason::NoPath } else { UnreachableReason::SamplingBudgetExhausted },
                attempts,
                best,
            }),
        }
    }
    Ok(Trajectory {
        schema: TRAJECTORY_SCHEMA.to_string(),
        seed: rng_seed,
        params: params.clone(),
        grid: spec,
        start,
        legs,
        unreachable,
    })
}

/// All instance ids in scene order.
pub fn all_targets(scene: &SceneState) -> Vec<InstanceId> {
    scene.instances.iter().map(|i| i.id.clone()).collect()
}
