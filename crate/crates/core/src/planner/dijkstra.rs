//! 8-connected shortest paths on a boolean grid with exact step costs.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::geometry::{BoolGrid, Cell};

/// Path length as `straight + diagonal·√2` cell steps, compared exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PathCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl PathCost {
    pub fn value(&self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * SQRT_2
    }

    pub fn meters(&self, resolution: f64) -> f64 {
        self.value() * resolution
    }

    fn step(self, diagonal: bool) -> Self {
        if diagonal {
            Self { diagonal: self.diagonal + 1, ..self }
        } else {
            Self { straight: self.straight + 1, ..self }
        }
    }
}

impl Ord for PathCost {
    fn cmp(&self, o: &Self) -> Ordering {
        // sign of (a1 - a2) + (b1 - b2)·√2 without rounding
        let a = self.straight as i64 - o.straight as i64;
        let b = self.diagonal as i64 - o.diagonal as i64;
        match (a.signum(), b.signum()) {
            (0, s) | (s, 0) => s.cmp(&0),
            (1, 1) => Ordering::Greater,
            (-1, -1) => Ordering::Less,
            (1, _) => (a * a).cmp(&(2 * b * b)),
            _ => (2 * b * b).cmp(&(a * a)),
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("start cell {0:?} is not accessible")]
    StartInaccessible(Cell),
    #[error("goal cell {0:?} is not accessible")]
    GoalInaccessible(Cell),
    #[error("no path from {0:?} to {1:?}")]
    Disconnected(Cell, Cell),
}

impl From<PathError> for super::PlanError {
    fn from(e: PathError) -> Self {
        super::PlanError::InvalidParams(e.to_string())
    }
}

/// Neighbor scan order; ties in the queue are broken by cell index.
const NEIGHBORS: [(i64, i64); 8] = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)];

pub struct ShortestPathTree<'g> {
    grid: &'g BoolGrid,
    cost: Vec<Option<PathCost>>,
    prev: Vec<usize>,
}

impl ShortestPathTree<'_> {
    pub fn cost_to(&self, goal: Cell) -> Option<PathCost> {
        if goal.0 >= self.grid.spec.cols || goal.1 >= self.grid.spec.rows {
            return None;
        }
        self.cost[self.grid.spec.index(goal)]
    }

    /// Cells from the root to `goal`, both included.
    pub fn path_to(&self, goal: Cell) -> Option<(Vec<Cell>, PathCost)> {
        let cost = self.cost_to(goal)?;
        let spec = &self.grid.spec;
        let mut i = spec.index(goal);
        let mut out = vec![goal];
        while self.prev[i] != i {
            i = self.prev[i];
            out.push(spec.cell_at(i));
        }
        out.reverse();
        Some((out, cost))
    }
}

fn search<'g>(grid: &'g BoolGrid, start: Cell, stop_at: Option<usize>) -> Result<ShortestPathTree<'g>, PathError> {
    let spec = &grid.spec;
    if start.0 >= spec.cols || start.1 >= spec.rows || !grid.get(start) {
        return Err(PathError::StartInaccessible(start));
    }
    let n = spec.len();
    let mut cost: Vec<Option<PathCost>> = vec![None; n];
    let mut done = vec![false; n];
    let mut prev: Vec<usize> = (0..n).collect();
    let s = spec.index(start);
    cost[s] = Some(PathCost::default());
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((PathCost::default(), s)));
    while let Some(Reverse((c, i))) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        if stop_at == Some(i) {
            break;
        }
        let (x, y) = spec.cell_at(i);
        for (dx, dy) in NEIGHBORS {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= spec.cols as i64 || ny >= spec.rows as i64 {
                continue;
            }
            let nc = (nx as usize, ny as usize);
            let j = spec.index(nc);
            if done[j] || !grid.get(nc) {
                continue;
            }
            let nc_cost = c.step(dx != 0 && dy != 0);
            if cost[j].is_none_or(|old| nc_cost < old) {
                cost[j] = Some(nc_cost);
                prev[j] = i;
                heap.push(Reverse((nc_cost, j)));
            }
        }
    }
    // Drop tentative labels that were never settled.
    for (k, c) in cost.iter_mut().enumerate() {
        if !done[k] {
            *c = None;
        }
    }
    Ok(ShortestPathTree { grid, cost, prev })
}

/// Single-source shortest paths from `start` to every reachable cell.
pub fn shortest_path_tree(grid: &BoolGrid, start: Cell) -> Result<ShortestPathTree<'_>, PathError> {
    search(grid, start, None)
}

pub fn dijkstra_path(grid: &BoolGrid, start: Cell, goal: Cell) -> Result<(Vec<Cell>, PathCost), PathError> {
    let spec = &grid.spec;
    if goal.0 >= spec.cols || goal.1 >= spec.rows || !grid.get(goal) {
        return Err(PathError::GoalInaccessible(goal));
    }
    let tree = search(grid, start, Some(spec.index(goal)))?;
    tree.path_to(goal).ok_or(PathError::Disconnected(start, goal))
}
