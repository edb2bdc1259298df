//! Pinhole camera with zero roll.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{GeometryError, OrientedBox, Vec3};

/// Camera pose with fixed roll of zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl CameraPose {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64, pitch: f64) -> Self {
        Self { x, y, z, yaw, pitch: pitch.clamp(-FRAC_PI_2, FRAC_PI_2), roll: 0.0 }
    }

    /// Pose at `eye` with the optical axis passing through `target`.
    pub fn looking_at(eye: Vec3, target: Vec3) -> Self {
        let d = target - eye;
        let yaw = d.y.atan2(d.x);
        let pitch = d.z.atan2(d.xy().length());
        Self::new(eye.x, eye.y, eye.z, yaw, pitch)
    }

    pub fn eye(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn forward(&self) -> Vec3 {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        Vec3::new(cp * cy, cp * sy, sp)
    }

    pub fn right(&self) -> Vec3 {
        let (sy, cy) = self.yaw.sin_cos();
        Vec3::new(sy, -cy, 0.0)
    }

    pub fn up(&self) -> Vec3 {
        self.right().cross(self.forward())
    }

    /// World point in camera coordinates `(right, up, forward)`.
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        let d = p - self.eye();
        Vec3::new(d.dot(self.right()), d.dot(self.up()), d.dot(self.forward()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub horizontal_fov: f64,
    pub vertical_fov: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraIntrinsics {
    /// 320×240 with a 90° horizontal field of view and square pixels.
    fn default() -> Self {
        Self::with_square_pixels(FRAC_PI_2, 320, 240)
    }
}

impl CameraIntrinsics {
    pub fn with_square_pixels(horizontal_fov: f64, width: usize, height: usize) -> Self {
        let v = 2.0 * ((horizontal_fov / 2.0).tan() * height as f64 / width as f64).atan();
        Self { horizontal_fov, vertical_fov: v, width, height }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let ok = |f: f64| f > 0.0 && f < std::f64::consts::PI;
        if !ok(self.horizontal_fov) || !ok(self.vertical_fov) || self.width == 0 || self.height == 0 {
            return Err(GeometryError::DegenerateIntrinsics);
        }
        Ok(())
    }

    pub fn tan_half_h(&self) -> f64 {
        (self.horizontal_fov / 2.0).tan()
    }

    pub fn tan_half_v(&self) -> f64 {
        (self.vertical_fov / 2.0).tan()
    }

    /// Whether a camera-space point lies in the viewing frustum in front of the camera.
    pub fn in_frustum(&self, c: Vec3) -> bool {
        c.z > 1e-9 && c.x.abs() <= c.z * self.tan_half_h() + 1e-12 && c.y.abs() <= c.z * self.tan_half_v() + 1e-12
    }
}

/// The 32 sample points of a box: 8 corners plus 2 interior points (at thirds) on each of its 12 edges.
pub fn box_sample_points(b: &OrientedBox) -> Vec<Vec3> {
    const EDGES: [(usize, usize); 12] =
        [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7)];
    let c = b.corners();
    let mut pts = c.to_vec();
    for (i, j) in EDGES {
        pts.push(c[i].lerp(c[j], 1.0 / 3.0));
        pts.push(c[i].lerp(c[j], 2.0 / 3.0));
    }
    pts
}

/// Fraction of the target's 32 sample points inside the frustum.
pub fn fov_containment(pose: &CameraPose, intrinsics: &CameraIntrinsics, target: &OrientedBox) -> f64 {
    let pts = box_sample_points(target);
    let inside = pts.iter().filter(|p| intrinsics.in_frustum(pose.to_camera(**p))).count();
    inside as f64 / pts.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(c: Vec3, h: f64) -> OrientedBox {
        OrientedBox::new(c, Vec3::new(h, h, h), 0.0)
    }

    #[test]
    fn camera_basis_is_orthonormal() {
        let p = CameraPose::new(0.0, 0.0, 1.0, 0.7, -0.3);
        let (f, r, u) = (p.forward(), p.right(), p.up());
        for v in [f, r, u] {
            assert!((v.length() - 1.0).abs() < 1e-12);
        }
        assert!(f.dot(r).abs() < 1e-12 && f.dot(u).abs() < 1e-12 && r.dot(u).abs() < 1e-12);
        assert!(u.z > 0.0);
    }

    #[test]
    fn centered_small_target_is_fully_contained() {
        let pose = CameraPose::new(0.0, 0.0, 1.0, 0.0, 0.0);
        let frac = fov_containment(&pose, &CameraIntrinsics::default(), &cube(Vec3::new(3.0, 0.0, 1.0), 0.2));
        assert_eq!(frac, 1.0);
    }

    #[test]
    fn target_behind_camera_is_not_contained() {
        let pose = CameraPose::new(0.0, 0.0, 1.0, 0.0, 0.0);
        let frac = fov_containment(&pose, &CameraIntrinsics::default(), &cube(Vec3::new(-3.0, 0.0, 1.0), 0.2));
        assert_eq!(frac, 0.0);
    }

    #[test]
    fn looking_at_aims_the_optical_axis() {
        let eye = Vec3::new(1.0, 2.0, 1.5);
        let tgt = Vec3::new(-2.0, 0.5, 0.4);
        let p = CameraPose::looking_at(eye, tgt);
        let c = p.to_camera(tgt);
        assert!(c.x.abs() < 1e-9 && c.y.abs() < 1e-9 && c.z > 0.0);
    }

    #[test]
    fn degenerate_intrinsics_rejected() {
        let k = CameraIntrinsics { horizontal_fov: std::f64::consts::PI, ..Default::default() };
        assert!(k.validate().is_err());
    }
}
