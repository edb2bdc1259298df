//! Flat-shaded z-buffered label/depth rasterizer.
//!
//! Every box is emitted as 12 triangles, walls as two triangles per edge and the
//! floor as an ear-clipped fan. Triangles are clipped against a near plane,
//! projected with a pinhole model and scan-converted with perspective-correct
//! depth. Pixels are sampled at their centers.

use serde::{Deserialize, Serialize};

use super::camera::{CameraIntrinsics, CameraPose};
use super::{polygon, GeometryError, OrientedBox, Vec3};
use crate::par;
use crate::scene::{InstanceId, SceneState};

const NEAR: f64 = 1e-3;
const BAND_ROWS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelLabel {
    Empty,
    Room,
    /// Index into the scene's instance list.
    Instance(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegDepthImage {
    pub width: usize,
    pub height: usize,
    pub label: Vec<PixelLabel>,
    /// Euclidean distance from the eye along each pixel ray; `+inf` where empty.
    pub depth: Vec<f64>,
    pub legend: Vec<InstanceId>,
}

impl SegDepthImage {
    pub fn count_label(&self, l: PixelLabel) -> usize {
        self.label.iter().filter(|x| **x == l).count()
    }

    pub fn pixel(&self, x: usize, y: usize) -> (PixelLabel, f64) {
        let i = y * self.width + x;
        (self.label[i], self.depth[i])
    }
}

/// What to draw.
#[derive(Debug, Clone, Copy)]
pub enum RenderSubset {
    All,
    /// Only this instance index, without room surfaces.
    Only(usize),
}

#[derive(Clone, Copy)]
struct Tri {
    v: [Vec3; 3],
    label: PixelLabel,
}

#[derive(Clone, Copy)]
struct ScreenTri {
    p: [(f64, f64); 3],
    inv_z: [f64; 3],
    area: f64,
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
    label: PixelLabel,
}

fn box_triangles(b: &OrientedBox, label: PixelLabel, out: &mut Vec<Tri>) {
    let c = b.corners();
    const FACES: [[usize; 4]; 6] = [[0, 1, 2, 3], [4, 5, 6, 7], [0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]];
    for f in FACES {
        out.push(Tri { v: [c[f[0]], c[f[1]], c[f[2]]], label });
        out.push(Tri { v: [c[f[0]], c[f[2]], c[f[3]]], label });
    }
}

fn scene_triangles(scene: &SceneState, subset: RenderSubset) -> Vec<Tri> {
    let mut tris = Vec::new();
    let emit = |k: usize, tris: &mut Vec<Tri>| {
        let inst = &scene.instances[k];
        for part in inst.part_boxes(scene.parts_of(inst)) {
            box_triangles(&part, PixelLabel::Instance(k as u32), tris);
        }
    };
    match subset {
        RenderSubset::Only(k) => emit(k, &mut tris),
        RenderSubset::All => {
            let poly = &scene.room.floor_polygon;
            for t in polygon::triangulate(poly) {
                tris.push(Tri { v: t.map(|i| poly[i].extend(0.0)), label: PixelLabel::Room });
            }
            let h = scene.room.wall_height;
            for w in scene.room.walls() {
                let (a, b) = (w.start, w.end);
                tris.push(Tri { v: [a.extend(0.0), b.extend(0.0), b.extend(h)], label: PixelLabel::Room });
                tris.push(Tri { v: [a.extend(0.0), b.extend(h), a.extend(h)], label: PixelLabel::Room });
            }
            for k in 0..scene.instances.len() {
                emit(k, &mut tris);
            }
        }
    }
    tris
}

/// Sutherland–Hodgman clip of a camera-space polygon against `z >= NEAR`.
fn clip_near(poly: &[Vec3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ina, inb) = (a.z >= NEAR, b.z >= NEAR);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (NEAR - a.z) / (b.z - a.z);
            out.push(a.lerp(b, t));
        }
    }
    out
}

fn project(pose: &CameraPose, k: &CameraIntrinsics, tris: &[Tri]) -> Vec<ScreenTri> {
    let (w, h) = (k.width as f64, k.height as f64);
    let (th, tv) = (k.tan_half_h(), k.tan_half_v());
    let mut out = Vec::with_capacity(tris.len());
    for t in tris {
        let cam = t.v.map(|p| pose.to_camera(p));
        if cam.iter().all(|c| c.z < NEAR) {
            continue;
        }
        let clipped = if cam.iter().all(|c| c.z >= NEAR) { cam.to_vec() } else { clip_near(&cam) };
        if clipped.len() < 3 {
            continue;
        }
        let scr: Vec<((f64, f64), f64)> = clipped
            .iter()
            .map(|c| (((c.x / c.z / th + 1.0) * 0.5 * w, (1.0 - c.y / c.z / tv) * 0.5 * h), 1.0 / c.z))
            .collect();
        for i in 1..scr.len() - 1 {
            let tri = [scr[0], scr[i], scr[i + 1]];
            let p = tri.map(|s| s.0);
            let area = (p[1].0 - p[0].0) * (p[2].1 - p[0].1) - (p[1].1 - p[0].1) * (p[2].0 - p[0].0);
            if area.abs() < 1e-12 {
                continue;
            }
            let xmin = p.iter().map(|q| q.0).fold(f64::INFINITY, f64::min);
            let xmax = p.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max);
            let ymin = p.iter().map(|q| q.1).fold(f64::INFINITY, f64::min);
            let ymax = p.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max);
            if xmax < 0.0 || ymax < 0.0 || xmin > w || ymin > h {
                continue;
            }
            // Pixel (i, j) has its center at (i + 0.5, j + 0.5).
            let x0 = (xmin - 0.5).ceil().max(0.0) as usize;
            let y0 = (ymin - 0.5).ceil().max(0.0) as usize;
            let x1 = ((xmax - 0.5).floor().min(w - 1.0)).max(-1.0);
            let y1 = ((ymax - 0.5).floor().min(h - 1.0)).max(-1.0);
            if x1 < 0.0 || y1 < 0.0 {
                continue;
            }
            out.push(ScreenTri {
                p,
                inv_z: tri.map(|s| s.1),
                area,
                x0,
                x1: x1 as usize,
                y0,
                y1: y1 as usize,
                label: t.label,
            });
        }
    }
    out
}

fn raster_band(tris: &[ScreenTri], width: usize, row0: usize, zbuf: &mut [f64], labels: &mut [PixelLabel]) {
    let rows = zbuf.len() / width;
    let row1 = row0 + rows;
    for t in tris {
        if t.y1 < row0 || t.y0 >= row1 || t.x0 > t.x1 {
            continue;
        }
        let inv_area = 1.0 / t.area;
        let [a, b, c] = t.p;
        for y in t.y0.max(row0)..=t.y1.min(row1 - 1) {
            let py = y as f64 + 0.5;
            for x in t.x0..=t.x1 {
                let px = x as f64 + 0.5;
                let w0 = ((b.0 - px) * (c.1 - py) - (b.1 - py) * (c.0 - px)) * inv_area;
                let w1 = ((c.0 - px) * (a.1 - py) - (c.1 - py) * (a.0 - px)) * inv_area;
                let w2 = 1.0 - w0 - w1;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let inv_z = w0 * t.inv_z[0] + w1 * t.inv_z[1] + w2 * t.inv_z[2];
                if inv_z <= 0.0 {
                    continue;
                }
                let z = 1.0 / inv_z;
                let i = (y - row0) * width + x;
                if z < zbuf[i] {
                    zbuf[i] = z;
                    labels[i] = t.label;
                }
            }
        }
    }
}

/// Renders a label map and a depth map of (a subset of) the scene.
pub fn render_subset(
    scene: &SceneState,
    pose: &CameraPose,
    intrinsics: &CameraIntrinsics,
    subset: RenderSubset,
) -> Result<SegDepthImage, GeometryError> {
    intrinsics.validate()?;
    let (w, h) = (intrinsics.width, intrinsics.height);
    let screen = project(pose, intrinsics, &scene_triangles(scene, subset));
    let mut zbuf = vec![f64::INFINITY; w * h];
    let mut labels = vec![PixelLabel::Empty; w * h];
    {
        let mut bands: Vec<(&mut [f64], &mut [PixelLabel])> =
            zbuf.chunks_mut(BAND_ROWS * w).zip(labels.chunks_mut(BAND_ROWS * w)).collect();
        par::for_each_chunk_mut(&mut bands, 1, |i, band| {
            let (z, l) = &mut band[0];
            raster_band(&screen, w, i * BAND_ROWS, z, l);
        });
    }
    let (th, tv) = (intrinsics.tan_half_h(), intrinsics.tan_half_v());
    let depth = zbuf
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            if z.is_finite() {
                let a = ((i % w) as f64 + 0.5) / w as f64 * 2.0 - 1.0;
                let b = 1.0 - ((i / w) as f64 + 0.5) / h as f64 * 2.0;
                z * (1.0 + (a * th).powi(2) + (b * tv).powi(2)).sqrt()
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Ok(SegDepthImage {
        width: w,
        height: h,
        label: labels,
        depth,
        legend: scene.instances.iter().map(|i| i.id.clone()).collect(),
    })
}

pub fn render_depth_labels(
    scene: &SceneState,
    pose: &CameraPose,
    intrinsics: &CameraIntrinsics,
) -> Result<SegDepthImage, GeometryError> {
    render_subset(scene, pose, intrinsics, RenderSubset::All)
}

/// One minus the ratio of the target's visible pixels in the full render to its
/// pixels when rendered alone. Returns 1 when the target projects to no pixels.
pub fn occlusion_rate(
    scene: &SceneState,
    pose: &CameraPose,
    intrinsics: &CameraIntrinsics,
    target: &InstanceId,
) -> Result<f64, GeometryError> {
    let k = scene.index_of(target).ok_or_else(|| GeometryError::UnknownInstance(target.clone()))?;
    let (full, alone) = par::join(
        || render_subset(scene, pose, intrinsics, RenderSubset::All),
        || render_subset(scene, pose, intrinsics, RenderSubset::Only(k)),
    );
    let label = PixelLabel::Instance(k as u32);
    let alone_px = alone?.count_label(label);
    if alone_px == 0 {
        return Ok(1.0);
    }
    let full_px = full?.count_label(label);
    Ok((1.0 - full_px as f64 / alone_px as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RoomSpec;
    use crate::scene::{ObjectInstance, Pose};

    fn scene(objs: &[(f64, f64, f64, f64, f64)]) -> SceneState {
        let mut s = SceneState::new(RoomSpec::rectangle(8.0, 6.0, 3.0));
        for (k, &(x, y, dx, dy, dz)) in objs.iter().enumerate() {
            s.instances.push(ObjectInstance {
                id: InstanceId(format!("o{k}")),
                category: "box".into(),
                pose: Pose { x, y, z: 0.0, yaw: 0.0 },
                dims: Vec3::new(dx, dy, dz),
                relation: None,
            });
        }
        s
    }

    fn cam() -> CameraPose {
        CameraPose::new(1.0, 3.0, 0.5, 0.0, 0.0)
    }

    #[test]
    fn facing_empty_wall_sees_only_room() {
        // No ceiling is drawn, so stand close enough that the wall fills the view.
        let near_wall = CameraPose::new(6.0, 3.0, 0.5, 0.0, 0.0);
        let img = render_depth_labels(&scene(&[]), &near_wall, &CameraIntrinsics::default()).unwrap();
        assert_eq!(img.count_label(PixelLabel::Room), img.width * img.height);
        let (_, d) = img.pixel(160, 120);
        assert!((d - 2.0).abs() < 0.02, "{d}");
    }

    #[test]
    fn empty_label_iff_infinite_depth() {
        let up = CameraPose::new(4.0, 3.0, 1.0, 0.0, 1.2);
        let img = render_depth_labels(&scene(&[(6.0, 3.0, 1.0, 1.0, 1.0)]), &up, &CameraIntrinsics::default()).unwrap();
        assert!(img.count_label(PixelLabel::Empty) > 0);
        for (l, d) in img.label.iter().zip(&img.depth) {
            assert_eq!(*l == PixelLabel::Empty, d.is_infinite());
        }
    }

    #[test]
    fn lone_box_blob_depths_are_bounded() {
        let s = scene(&[(4.0, 3.0, 1.0, 1.0, 1.0)]);
        let img = render_depth_labels(&s, &cam(), &CameraIntrinsics::default()).unwrap();
        let eye = cam().eye();
        let corners = s.instances[0].bbox().corners();
        let far = corners.iter().map(|c| c.distance(eye)).fold(0.0, f64::max);
        let near = 2.5;
        let mut n = 0;
        for (l, d) in img.label.iter().zip(&img.depth) {
            if *l == PixelLabel::Instance(0) {
                n += 1;
                assert!(*d >= near - 1e-9 && *d <= far + 1e-9, "{d}");
            }
        }
        assert!(n > 1000);
    }

    #[test]
    fn hidden_box_gets_no_pixels() {
        let s = scene(&[(3.0, 3.0, 0.5, 2.0, 2.0), (5.0, 3.0, 0.4, 0.4, 0.4)]);
        let img = render_depth_labels(&s, &cam(), &CameraIntrinsics::default()).unwrap();
        assert_eq!(img.count_label(PixelLabel::Instance(1)), 0);
        assert_eq!(occlusion_rate(&s, &cam(), &CameraIntrinsics::default(), &"o1".into()).unwrap(), 1.0);
        assert_eq!(occlusion_rate(&s, &cam(), &CameraIntrinsics::default(), &"o0".into()).unwrap(), 0.0);
    }

    #[test]
    fn camera_inside_box_clips_without_panicking() {
        let s = scene(&[(1.0, 3.0, 1.0, 1.0, 1.0)]);
        let img = render_depth_labels(&s, &cam(), &CameraIntrinsics::default()).unwrap();
        assert!(img.count_label(PixelLabel::Instance(0)) > 0);
    }

    #[test]
    fn degenerate_intrinsics_error() {
        let k = CameraIntrinsics { horizontal_fov: 0.0, ..CameraIntrinsics::default() };
        assert!(render_depth_labels(&scene(&[]), &cam(), &k).is_err());
    }
}
