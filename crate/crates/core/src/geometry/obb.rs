//! Upright oriented boxes: arbitrary yaw about the vertical axis, no pitch or roll.

use serde::{Deserialize, Serialize};

use super::vec::normalize_angle;
use super::{Vec2, Vec3};

/// Overlap below this depth counts as touching, not colliding.
pub const CONTACT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec3,
    pub half_extents: Vec3,
    pub yaw: f64,
}

impl OrientedBox {
    pub fn new(center: Vec3, half_extents: Vec3, yaw: f64) -> Self {
        Self { center, half_extents, yaw: normalize_angle(yaw) }
    }

    pub fn is_valid(&self) -> bool {
        self.half_extents.x > 0.0
            && self.half_extents.y > 0.0
            && self.half_extents.z > 0.0
            && (-std::f64::consts::PI..std::f64::consts::PI).contains(&self.yaw)
    }

    /// Local +x and +y axes in the world frame.
    pub fn axes(&self) -> (Vec2, Vec2) {
        let ax = Vec2::from_angle(self.yaw);
        (ax, ax.perp())
    }

    pub fn bottom(&self) -> f64 {
        self.center.z - self.half_extents.z
    }

    pub fn top(&self) -> f64 {
        self.center.z + self.half_extents.z
    }

    /// Footprint corners, counter-clockwise starting at local (+x, +y).
    pub fn footprint(&self) -> [Vec2; 4] {
        let (ax, ay) = self.axes();
        let c = self.center.xy();
        let (hx, hy) = (self.half_extents.x, self.half_extents.y);
        [
            c + ax * hx + ay * hy,
            c - ax * hx + ay * hy,
            c - ax * hx - ay * hy,
            c + ax * hx - ay * hy,
        ]
    }

    pub fn footprint_area(&self) -> f64 {
        4.0 * self.half_extents.x * self.half_extents.y
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let fp = self.footprint();
        let (b, t) = (self.bottom(), self.top());
        [
            fp[0].extend(b),
            fp[1].extend(b),
            fp[2].extend(b),
            fp[3].extend(b),
            fp[0].extend(t),
            fp[1].extend(t),
            fp[2].extend(t),
            fp[3].extend(t),
        ]
    }

    /// Point expressed in the box frame (relative to center, unrotated).
    pub fn to_local(&self, p: Vec3) -> Vec3 {
        let d = (p - self.center).xy().rotated(-self.yaw);
        Vec3::new(d.x, d.y, p.z - self.center.z)
    }

    pub fn to_world(&self, local: Vec3) -> Vec3 {
        let d = local.xy().rotated(self.yaw);
        Vec3::new(self.center.x + d.x, self.center.y + d.y, self.center.z + local.z)
    }

    pub fn contains_point(&self, p: Vec3) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half_extents.x && l.y.abs() <= self.half_extents.y && l.z.abs() <= self.half_extents.z
    }

    /// Planar distance from `p` to the footprint rectangle; zero inside.
    pub fn footprint_distance(&self, p: Vec2) -> f64 {
        let l = (p - self.center.xy()).rotated(-self.yaw);
        let dx = (l.x.abs() - self.half_extents.x).max(0.0);
        let dy = (l.y.abs() - self.half_extents.y).max(0.0);
        dx.hypot(dy)
    }

    pub fn footprint_contains(&self, p: Vec2, tol: f64) -> bool {
        let l = (p - self.center.xy()).rotated(-self.yaw);
        l.x.abs() <= self.half_extents.x + tol && l.y.abs() <= self.half_extents.y + tol
    }

    /// Minimum penetration depth over all separating-axis candidates.
    /// Non-positive values mean the boxes are separated or touching.
    pub fn penetration_depth(&self, other: &OrientedBox) -> f64 {
        let dz = (self.center.z - other.center.z).abs();
        let mut depth = self.half_extents.z + other.half_extents.z - dz;
        if depth <= 0.0 {
            return depth;
        }
        let d = other.center.xy() - self.center.xy();
        let (a0, a1) = self.axes();
        let (b0, b1) = other.axes();
        for axis in [a0, a1, b0, b1] {
            let ra = self.half_extents.x * a0.dot(axis).abs() + self.half_extents.y * a1.dot(axis).abs();
            let rb = other.half_extents.x * b0.dot(axis).abs() + other.half_extents.y * b1.dot(axis).abs();
            let overlap = ra + rb - d.dot(axis).abs();
            depth = depth.min(overlap);
            if depth <= 0.0 {
                return depth;
            }
        }
        depth
    }

    pub fn intersects(&self, other: &OrientedBox) -> bool {
        self.penetration_depth(other) > CONTACT_TOLERANCE
    }

    /// Applies a planar rigid motion: rotate by `angle` about `pivot`, then translate.
    pub fn transformed(&self, pivot: Vec2, angle: f64, shift: Vec2) -> OrientedBox {
        let c = pivot + (self.center.xy() - pivot).rotated(angle) + shift;
        OrientedBox::new(c.extend(self.center.z), self.half_extents, self.yaw + angle)
    }
}

/// Free function form of [`OrientedBox::intersects`].
pub fn obb_intersects(a: &OrientedBox, b: &OrientedBox) -> bool {
    a.intersects(b)
}

/// Planar separating-axis overlap depth of two footprints.
pub fn footprint_overlap(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let d = b.center.xy() - a.center.xy();
    let (a0, a1) = a.axes();
    let (b0, b1) = b.axes();
    let mut depth = f64::INFINITY;
    for axis in [a0, a1, b0, b1] {
        let ra = a.half_extents.x * a0.dot(axis).abs() + a.half_extents.y * a1.dot(axis).abs();
        let rb = b.half_extents.x * b0.dot(axis).abs() + b.half_extents.y * b1.dot(axis).abs();
        depth = depth.min(ra + rb - d.dot(axis).abs());
    }
    depth
}

/// Minimum planar distance between two footprints; zero when they overlap.
pub fn footprint_gap(a: &OrientedBox, b: &OrientedBox) -> f64 {
    if footprint_overlap(a, b) >= 0.0 {
        return 0.0;
    }
    let fa = a.footprint();
    let fb = b.footprint();
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let (p, q) = (fa[i], fa[(i + 1) % 4]);
        let (r, s) = (fb[i], fb[(i + 1) % 4]);
        for k in 0..4 {
            best = best.min(super::polygon::point_segment_distance(fb[k], p, q));
            best = best.min(super::polygon::point_segment_distance(fa[k], r, s));
        }
    }
    best
}

/// Distance along a planar ray to the first hit on a footprint rectangle.
pub fn ray_footprint_hit(origin: Vec2, dir: Vec2, b: &OrientedBox) -> Option<f64> {
    let o = (origin - b.center.xy()).rotated(-b.yaw);
    let d = dir.rotated(-b.yaw);
    let (mut t0, mut t1) = (0.0_f64, f64::INFINITY);
    for (oc, dc, h) in [(o.x, d.x, b.half_extents.x), (o.y, d.y, b.half_extents.y)] {
        if dc.abs() < 1e-15 {
            if oc.abs() > h {
                return None;
            }
        } else {
            let (mut a, mut c) = ((-h - oc) / dc, (h - oc) / dc);
            if a > c {
                std::mem::swap(&mut a, &mut c);
            }
            t0 = t0.max(a);
            t1 = t1.min(c);
            if t0 > t1 {
                return None;
            }
        }
    }
    Some(t0)
}
