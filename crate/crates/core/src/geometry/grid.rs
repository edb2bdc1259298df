//! Floor-plane grids: BEV label maps and camera accessibility maps.

use serde::{Deserialize, Serialize};

use super::{GeometryError, RoomSpec, Vec2};
use crate::par;
use crate::scene::{InstanceId, SceneState};

pub const DEFAULT_BEV_RESOLUTION: f64 = 0.05;
pub const DEFAULT_ACCESS_RESOLUTION: f64 = 0.1;
pub const DEFAULT_CLEARANCE: f64 = 0.25;

/// Placement of a regular grid over the floor plane. Cell `(col, row)` spans
/// `origin + [col, col+1) × [row, row+1)` in units of `resolution`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec2,
    pub resolution: f64,
    pub cols: usize,
    pub rows: usize,
}

pub type Cell = (usize, usize);

impl GridSpec {
    /// Grid covering the room's bounding rectangle.
    pub fn covering(room: &RoomSpec, resolution: f64) -> Result<Self, GeometryError> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(GeometryError::InvalidResolution(resolution));
        }
        let (lo, hi) = room.bounds();
        let cols = ((hi.x - lo.x) / resolution - 1e-9).ceil().max(0.0) as usize;
        let rows = ((hi.y - lo.y) / resolution - 1e-9).ceil().max(0.0) as usize;
        Ok(Self { origin: lo, resolution, cols, rows })
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, (c, r): Cell) -> usize {
        r * self.cols + c
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        (index % self.cols, index / self.cols)
    }

    pub fn center(&self, (c, r): Cell) -> Vec2 {
        Vec2::new(
            self.origin.x + (c as f64 + 0.5) * self.resolution,
            self.origin.y + (r as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell_of(&self, p: Vec2) -> Option<Cell> {
        let fx = ((p.x - self.origin.x) / self.resolution).floor();
        let fy = ((p.y - self.origin.y) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (c, r) = (fx as usize, fy as usize);
        (c < self.cols && r < self.rows).then_some((c, r))
    }
}

/// Per-cell instance labels; `None` is empty floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelGrid {
    pub spec: GridSpec,
    /// Instance ids referenced by `cells`, in scene order.
    pub legend: Vec<InstanceId>,
    pub cells: Vec<Option<u32>>,
}

impl LabelGrid {
    pub fn get(&self, cell: Cell) -> Option<&InstanceId> {
        self.cells[self.spec.index(cell)].map(|i| &self.legend[i as usize])
    }

    pub fn labeled_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn count_of(&self, id: &InstanceId) -> usize {
        match self.legend.iter().position(|l| l == id) {
            Some(k) => self.cells.iter().filter(|c| **c == Some(k as u32)).count(),
            None => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoolGrid {
    pub spec: GridSpec,
    pub cells: Vec<bool>,
}

impl BoolGrid {
    pub fn get(&self, cell: Cell) -> bool {
        self.cells[self.spec.index(cell)]
    }

    /// Lookup by world point; points off the grid are inaccessible.
    pub fn at_point(&self, p: Vec2) -> bool {
        self.spec.cell_of(p).is_some_and(|c| self.get(c))
    }

    pub fn true_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }
}

/// Labels each cell with the topmost instance whose footprint covers the cell center.
pub fn rasterize_bev(scene: &SceneState, resolution: f64) -> Result<LabelGrid, GeometryError> {
    let spec = GridSpec::covering(&scene.room, resolution)?;
    if spec.cols < 2 || spec.rows < 2 {
        return Err(GeometryError::GridTooCoarse { cols: spec.cols, rows: spec.rows });
    }
    let boxes: Vec<_> = scene.instances.iter().map(|i| i.bbox()).collect();
    let rows: Vec<Vec<Option<u32>>> = par::map_range(spec.rows, |r| {
        let mut row = vec![None; spec.cols];
        let mut best_top = vec![f64::NEG_INFINITY; spec.cols];
        for (k, b) in boxes.iter().enumerate() {
            let fp = b.footprint();
            let (ylo, yhi) = fp.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.y), a.1.max(p.y)));
            let cy = spec.center((0, r)).y;
            if cy < ylo || cy > yhi {
                continue;
            }
            let (xlo, xhi) = fp.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.x), a.1.max(p.x)));
            let c0 = (((xlo - spec.origin.x) / spec.resolution - 0.5).floor().max(0.0)) as usize;
            let c1 = ((((xhi - spec.origin.x) / spec.resolution - 0.5).ceil()) as usize).min(spec.cols.saturating_sub(1));
            for c in c0..=c1 {
                let p = spec.center((c, r));
                if b.footprint_contains(p, 0.0) && b.top() > best_top[c] {
                    best_top[c] = b.top();
                    row[c] = Some(k as u32);
                }
            }
        }
        row
    });
    Ok(LabelGrid {
        spec,
        legend: scene.instances.iter().map(|i| i.id.clone()).collect(),
        cells: rows.into_iter().flatten().collect(),
    })
}

/// Marks cells whose center is inside the room and at least `clearance` from every footprint.
pub fn accessible_grid(scene: &SceneState, resolution: f64, clearance: f64) -> Result<BoolGrid, GeometryError> {
    if !(clearance >= 0.0) {
        return Err(GeometryError::InvalidClearance(clearance));
    }
    let spec = GridSpec::covering(&scene.room, resolution)?;
    let boxes: Vec<_> = scene.instances.iter().map(|i| i.bbox()).collect();
    let rows: Vec<Vec<bool>> = par::map_range(spec.rows, |r| {
        (0..spec.cols)
            .map(|c| {
                let p = spec.center((c, r));
                scene.room.contains_point(p)
                    && boxes.iter().all(|b| {
                        let d = b.footprint_distance(p);
                        d > 0.0 && d >= clearance
                    })
            })
            .collect()
    });
    Ok(BoolGrid { spec, cells: rows.into_iter().flatten().collect() })
}
