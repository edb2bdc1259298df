//! Spatial primitives: rooms, upright oriented boxes, floor grids, the camera
//! model and the label/depth rasterizer.

pub mod camera;
pub mod grid;
pub mod image;
pub mod obb;
pub mod polygon;
pub mod render;
pub mod room;
mod vec;

pub use camera::{fov_containment, CameraIntrinsics, CameraPose};
pub use grid::{accessible_grid, rasterize_bev, BoolGrid, Cell, GridSpec, LabelGrid};
pub use obb::{obb_intersects, OrientedBox, CONTACT_TOLERANCE};
pub use render::{occlusion_rate, render_depth_labels, PixelLabel, SegDepthImage};
pub use room::{contained_in_room, RoomSpec, Wall};
pub use vec::{normalize_angle, Vec2, Vec3};

use crate::scene::InstanceId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid room: {0}")]
    InvalidRoom(String),
    #[error("grid resolution must be positive, got {0}")]
    InvalidResolution(f64),
    #[error("clearance must be non-negative, got {0}")]
    InvalidClearance(f64),
    #[error("grid of {cols}x{rows} cells is too coarse (need at least 2x2)")]
    GridTooCoarse { cols: usize, rows: usize },
    #[error("camera intrinsics are degenerate")]
    DegenerateIntrinsics,
    #[error("unknown instance {0}")]
    UnknownInstance(InstanceId),
}
