//! Scene metrics and the structured error report that drives refinement.

pub mod collisions;

use serde::{Deserialize, Serialize};

use crate::constraints::eval::{outcomes, report_from, ConstraintRef, OccupancyMode};
use crate::constraints::{evaluate_score, ConstraintProgram, SatisfactionReport};
use crate::geometry::grid::DEFAULT_BEV_RESOLUTION;
use crate::geometry::{rasterize_bev, LabelGrid};
use crate::scene::{InstanceId, SceneState};

pub use collisions::{collision_pairs, collision_pairs_brute, out_of_boundary};

pub const REPORT_SCHEMA: &str = "report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub fidelity: f64,
    pub occupancy_ratio: f64,
    pub out_of_boundary_count: usize,
    pub collision_pair_count: usize,
    pub object_count: usize,
}

impl SceneMetrics {
    pub const CSV_HEADER: &'static str = "fidelity,occupancy_ratio,ob,cn,object_count";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{},{},{}",
            self.fidelity, self.occupancy_ratio, self.out_of_boundary_count, self.collision_pair_count, self.object_count
        )
    }

    pub fn artifact_free(&self) -> bool {
        self.out_of_boundary_count == 0 && self.collision_pair_count == 0
    }

    /// Fidelity 1 with no physical artifacts.
    pub fn converged(&self) -> bool {
        self.fidelity == 1.0 && self.artifact_free()
    }
}

/// Footprint-union area over floor area, measured on a BEV grid at `resolution`.
pub fn occupancy_ratio_at(scene: &SceneState, resolution: f64) -> f64 {
    let area = scene.room.area();
    if area <= 0.0 {
        return 0.0;
    }
    match rasterize_bev(scene, resolution) {
        Ok(grid) => (grid.labeled_count() as f64 * resolution * resolution / area).clamp(0.0, 1.0),
        Err(_) => footprint_sum_ratio(scene),
    }
}

pub fn occupancy_ratio(scene: &SceneState) -> f64 {
    occupancy_ratio_at(scene, DEFAULT_BEV_RESOLUTION)
}

/// Sum of footprint areas of objects not resting on another object, over floor area.
pub fn footprint_sum_ratio(scene: &SceneState) -> f64 {
    let area = scene.room.area();
    if area <= 0.0 {
        return 0.0;
    }
    let sum: f64 = scene
        .instances
        .iter()
        .filter(|i| !i.relation.as_ref().is_some_and(|r| r.kind.is_stacking()))
        .map(|i| i.dims.x * i.dims.y)
        .sum();
    (sum / area).clamp(0.0, 1.0)
}

/// Fraction of quantitative requirements (counts and the occupancy band) met.
pub fn compute_fidelity(program: &ConstraintProgram, scene: &SceneState) -> f64 {
    let o = outcomes(program, scene, OccupancyMode::Grid(DEFAULT_BEV_RESOLUTION));
    fidelity_of(&o)
}

pub fn fidelity_of(outcomes: &[crate::constraints::Outcome]) -> f64 {
    let quantitative: Vec<_> = outcomes.iter().filter(|o| !matches!(o.which, ConstraintRef::Relation(_))).collect();
    if quantitative.is_empty() {
        return 1.0;
    }
    quantitative.iter().filter(|o| o.satisfied()).count() as f64 / quantitative.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationCounts {
    pub out_of_boundary: usize,
    pub collisions: usize,
    pub pairs: Vec<(InstanceId, InstanceId)>,
    pub oob_ids: Vec<InstanceId>,
}

pub fn count_violations(scene: &SceneState) -> ViolationCounts {
    let id = |k: usize| scene.instances[k].id.clone();
    let pairs: Vec<_> = collision_pairs(scene).into_iter().map(|(a, b)| (id(a), id(b))).collect();
    let oob_ids: Vec<_> = out_of_boundary(scene).into_iter().map(id).collect();
    ViolationCounts { out_of_boundary: oob_ids.len(), collisions: pairs.len(), pairs, oob_ids }
}

pub fn compute_metrics(program: &ConstraintProgram, scene: &SceneState) -> SceneMetrics {
    let o = outcomes(program, scene, OccupancyMode::Grid(DEFAULT_BEV_RESOLUTION));
    let v = count_violations(scene);
    SceneMetrics {
        fidelity: fidelity_of(&o),
        occupancy_ratio: occupancy_ratio(scene),
        out_of_boundary_count: v.out_of_boundary,
        collision_pair_count: v.collisions,
        object_count: scene.instances.len(),
    }
}

/// On-disk `report/1` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub schema: String,
    pub textual_summary: Vec<String>,
    pub satisfaction: SatisfactionReport,
    pub collision_pairs: Vec<(InstanceId, InstanceId)>,
    pub oob_ids: Vec<InstanceId>,
    pub metrics: SceneMetrics,
    pub bev: LabelGrid,
}

impl ErrorReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn build_error_report(program: &ConstraintProgram, scene: &SceneState) -> ErrorReport {
    let o = outcomes(program, scene, OccupancyMode::Grid(DEFAULT_BEV_RESOLUTION));
    let satisfaction = report_from(program, &o, evaluate_score(program, scene));
    let v = count_violations(scene);
    let occupancy = occupancy_ratio(scene);
    let metrics = SceneMetrics {
        fidelity: fidelity_of(&o),
        occupancy_ratio: occupancy,
        out_of_boundary_count: v.out_of_boundary,
        collision_pair_count: v.collisions,
        object_count: scene.instances.len(),
    };
    let bev = rasterize_bev(scene, DEFAULT_BEV_RESOLUTION).unwrap_or_else(|_| LabelGrid {
        spec: crate::geometry::GridSpec { origin: scene.room.bounds().0, resolution: DEFAULT_BEV_RESOLUTION, cols: 0, rows: 0 },
        legend: Vec::new(),
        cells: Vec::new(),
    });
    ErrorReport {
        schema: REPORT_SCHEMA.to_string(),
        textual_summary: satisfaction.violated.iter().map(|v| v.sentence.clone()).collect(),
        satisfaction,
        collision_pairs: v.pairs,
        oob_ids: v.oob_ids,
        metrics,
        bev,
    }
}
