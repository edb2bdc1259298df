use serde::{Deserialize, Serialize};

use super::obb::OrientedBox;
use super::polygon;
use super::{GeometryError, Vec2, Vec3};

const DOOR_TOLERANCE: f64 = 1e-6;
const CONTAIN_TOLERANCE: f64 = 1e-9;

/// A room: simple CCW floor polygon extruded to `wall_height`, with a door on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub floor_polygon: Vec<Vec2>,
    pub wall_height: f64,
    pub door_position: Vec2,
}

/// One wall segment of the floor polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub index: usize,
    pub start: Vec2,
    pub end: Vec2,
}

impl Wall {
    pub fn direction(&self) -> Vec2 {
        (self.end - self.start).normalized()
    }

    /// Unit normal pointing into the room (CCW winding).
    pub fn inward_normal(&self) -> Vec2 {
        self.direction().perp()
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        polygon::point_segment_distance(p, self.start, self.end)
    }
}

impl RoomSpec {
    /// Axis-aligned rectangular room with the door centred on the south wall.
    pub fn rectangle(width: f64, depth: f64, wall_height: f64) -> Self {
        Self {
            floor_polygon: vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(width, 0.0),
                Vec2::new(width, depth),
                Vec2::new(0.0, depth),
            ],
            wall_height,
            door_position: Vec2::new(width / 2.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.floor_polygon.len() < 3 {
            return Err(GeometryError::InvalidRoom("floor polygon needs at least 3 vertices".into()));
        }
        if !polygon::is_simple(&self.floor_polygon) {
            return Err(GeometryError::InvalidRoom("floor polygon self-intersects".into()));
        }
        if polygon::signed_area(&self.floor_polygon) <= 0.0 {
            return Err(GeometryError::InvalidRoom("floor polygon must be counter-clockwise with positive area".into()));
        }
        if !(self.wall_height > 0.0 && self.wall_height.is_finite()) {
            return Err(GeometryError::InvalidRoom("wall height must be positive".into()));
        }
        if polygon::boundary_distance(&self.floor_polygon, self.door_position) > DOOR_TOLERANCE {
            return Err(GeometryError::InvalidRoom("door is not on the room boundary".into()));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        polygon::signed_area(&self.floor_polygon)
    }

    pub fn centroid(&self) -> Vec2 {
        polygon::centroid(&self.floor_polygon)
    }

    pub fn bounds(&self) -> (Vec2, Vec2) {
        polygon::bounds(&self.floor_polygon)
    }

    pub fn walls(&self) -> impl Iterator<Item = Wall> + '_ {
        let n = self.floor_polygon.len();
        (0..n).map(move |i| Wall { index: i, start: self.floor_polygon[i], end: self.floor_polygon[(i + 1) % n] })
    }

    pub fn wall(&self, index: usize) -> Option<Wall> {
        let n = self.floor_polygon.len();
        (index < n).then(|| Wall { index, start: self.floor_polygon[index], end: self.floor_polygon[(index + 1) % n] })
    }

    pub fn contains_point(&self, p: Vec2) -> bool {
        polygon::contains_point(&self.floor_polygon, p, CONTAIN_TOLERANCE)
    }

    /// Distance from `p` to the nearest wall segment.
    pub fn wall_distance(&self, p: Vec2) -> f64 {
        polygon::boundary_distance(&self.floor_polygon, p)
    }

    /// Wall whose door-carrying edge is closest to the door point.
    pub fn door_wall(&self) -> Wall {
        self.walls()
            .min_by(|a, b| a.distance_to(self.door_position).total_cmp(&b.distance_to(self.door_position)))
            .expect("room has walls")
    }

    /// Floor patch just inside the door that furniture has to leave clear, so
    /// the camera can always enter the room.
    pub fn door_zone(&self) -> OrientedBox {
        let w = self.door_wall();
        let c = self.door_position + w.inward_normal() * (DOOR_ZONE_DEPTH / 2.0);
        OrientedBox::new(
            Vec3::new(c.x, c.y, self.wall_height / 2.0),
            Vec3::new(DOOR_ZONE_HALF_WIDTH, DOOR_ZONE_DEPTH / 2.0, self.wall_height / 2.0),
            w.direction().angle(),
        )
    }

    /// Uniformly scales the room about its centroid so the area grows by `area_factor`.
    pub fn scaled(&self, area_factor: f64) -> RoomSpec {
        let s = area_factor.sqrt();
        let c = self.centroid();
        let f = |p: Vec2| c + (p - c) * s;
        RoomSpec {
            floor_polygon: self.floor_polygon.iter().map(|p| f(*p)).collect(),
            wall_height: self.wall_height,
            door_position: f(self.door_position),
        }
    }
}

pub const DOOR_ZONE_HALF_WIDTH: f64 = 0.5;
pub const DOOR_ZONE_DEPTH: f64 = 0.6;

/// True iff all four footprint corners are inside-or-on the floor polygon and the
/// box top does not exceed the wall height.
pub fn contained_in_room(b: &OrientedBox, room: &RoomSpec) -> bool {
    b.top() <= room.wall_height + CONTAIN_TOLERANCE && b.footprint().iter().all(|c| room.contains_point(*c))
}
